//! Declarative experiment files and the runs they describe.
//!
//! An experiment file is TOML with the sections `[network]`, `[arrivals]`,
//! `[carbon]`, `[policy]`, `[oracle]` and `[experiment]`. Unknown keys are
//! rejected. Trace paths are resolved relative to the file's directory.
//!
//! ```toml
//! [network]
//! edge_send_energy = [3.45, 3.45]
//! cloud_proc_energy = [[74.0], [97.0]]
//! edge_budget = 4000.0
//! cloud_budget = [30000.0]
//!
//! [arrivals]
//! kind = "uniform_iid"
//! max_arrivals = 20
//!
//! [carbon]
//! kind = "uniform_iid"
//! max_intensity = 700.0
//!
//! [experiment]
//! policies = ["carbon_intensity", "queue_length"]
//! horizon = 100
//! seeds = [1]
//! ```

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::{CarbonSnapshot, NetworkSpec, QueueState};
use crate::oracle::{oracle_action, OracleConfig};
use crate::output;
use crate::policy::PolicyConfig;
use crate::sim::{self, AuditRow, PolicyKind, RunConfig, RunMetrics, SimError, SweepRow};
use crate::workload::{
    load_arrivals_csv, load_carbon_csv, ArrivalModel, CarbonModel, WorkloadError,
};

/// Problems with the experiment file itself. Detected before any slot runs.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("`{field}`: {source}")]
    Input {
        field: String,
        source: WorkloadError,
    },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("slot {slot}: oracle objective {oracle} exceeds greedy objective {greedy}")]
    AuditFailed { slot: u64, greedy: f64, oracle: f64 },
    #[error("writing {path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl ExperimentError {
    pub fn is_config_error(&self) -> bool {
        match self {
            ExperimentError::Config(_) => true,
            ExperimentError::Sim(e) => !e.is_policy_violation(),
            _ => false,
        }
    }

    /// Infeasible or over-drawing actions, or a failed dominance audit.
    pub fn is_policy_violation(&self) -> bool {
        match self {
            ExperimentError::Sim(e) => e.is_policy_violation(),
            ExperimentError::AuditFailed { .. } => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArrivalsSection {
    UniformIid { max_arrivals: u64 },
    Constant { value: u64 },
    FileTrace { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CarbonSection {
    UniformIid {
        max_intensity: f64,
    },
    Constant {
        value: f64,
    },
    /// Region mapping is required; there is no default.
    CsvTrace {
        path: PathBuf,
        edge_region: String,
        cloud_regions: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicyKind>,
    /// Reference policy for reductions. Defaults to `queue_length` when
    /// listed, otherwise the first policy.
    #[serde(default)]
    pub baseline: Option<PolicyKind>,
    #[serde(default)]
    pub v_grid: Vec<f64>,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_stride")]
    pub metrics_stride: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_audit_slots")]
    pub audit_slots: u64,
    #[serde(default)]
    pub record_actions: bool,
}

fn default_policies() -> Vec<PolicyKind> {
    vec![PolicyKind::CarbonIntensity, PolicyKind::QueueLength]
}
fn default_horizon() -> u64 {
    10_000
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_stride() -> u64 {
    1
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_audit_slots() -> u64 {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub network: NetworkSpec,
    pub arrivals: ArrivalsSection,
    pub carbon: CarbonSection,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    pub experiment: ExperimentSection,
}

/// Scalar command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub horizon: Option<u64>,
    pub policy: Option<PolicyKind>,
    pub output_dir: Option<PathBuf>,
}

/// A parsed, validated experiment with its input streams loaded.
#[derive(Debug, Clone)]
pub struct Experiment {
    /// The resolved file: overrides applied, trace paths made absolute.
    pub file: ExperimentFile,
    arrival_model: ArrivalModel,
    carbon_model: CarbonModel,
}

/// Policy runs on shared seeds, with reductions against the baseline.
#[derive(Debug, Clone)]
pub struct Comparison {
    /// Policy names, suffixed `_2`, `_3`… when a policy is listed twice.
    pub labels: Vec<String>,
    pub baseline: usize,
    /// `runs[s][i]` is policy `i` on seed `s`.
    pub runs: Vec<Vec<RunMetrics>>,
    /// Mean over seeds of `1 − cumulative / baseline cumulative`.
    pub reductions: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub policy: PolicyKind,
    /// Seed-averaged rows, one per V.
    pub rows: Vec<SweepRow>,
    pub per_seed: Vec<Vec<SweepRow>>,
    /// Spearman of (V, emissions) per seed.
    pub emissions_rho: Vec<f64>,
    /// Spearman of (V, mean edge queue) per seed.
    pub edge_queue_rho: Vec<f64>,
}

impl SweepReport {
    pub fn mean_emissions_rho(&self) -> f64 {
        mean(&self.emissions_rho)
    }

    pub fn mean_edge_queue_rho(&self) -> f64 {
        mean(&self.edge_queue_rho)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

impl Experiment {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let base = fs::canonicalize(if dir.as_os_str().is_empty() { Path::new(".") } else { dir })
            .map_err(|source| ConfigError::Read {
                path: dir.to_path_buf(),
                source,
            })?;
        let file: ExperimentFile = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_file(file, &base, overrides)
    }

    pub fn from_toml(text: &str, base_dir: &Path, overrides: &Overrides) -> Result<Self, ConfigError> {
        let file: ExperimentFile = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::from("<inline>"),
            message: e.to_string(),
        })?;
        Self::from_file(file, base_dir, overrides)
    }

    pub fn from_file(
        mut file: ExperimentFile,
        base_dir: &Path,
        overrides: &Overrides,
    ) -> Result<Self, ConfigError> {
        let ex = &mut file.experiment;
        if let Some(seed) = overrides.seed {
            ex.seeds = vec![seed];
        }
        if let Some(h) = overrides.horizon {
            ex.horizon = h;
        }
        if let Some(p) = overrides.policy {
            ex.policies = vec![p];
            ex.baseline = None;
        }
        if let Some(out) = &overrides.output_dir {
            ex.output_dir = out.clone();
        }
        validate_section(ex)?;
        file.policy
            .validate()
            .map_err(|m| invalid("policy", m))?;
        file.oracle
            .validate()
            .map_err(|e| invalid("oracle", e.to_string()))?;

        let spec = file.network.clone();
        let arrival_model = match &mut file.arrivals {
            ArrivalsSection::UniformIid { max_arrivals } => ArrivalModel::UniformIid {
                max_arrivals: *max_arrivals,
                seed: 0,
            },
            ArrivalsSection::Constant { value } => ArrivalModel::Constant { value: *value },
            ArrivalsSection::FileTrace { path } => {
                *path = base_dir.join(&*path);
                let trace = load_arrivals_csv(path).map_err(|source| ConfigError::Input {
                    field: "arrivals.path".into(),
                    source,
                })?;
                ArrivalModel::FileTrace {
                    trace: Arc::new(trace),
                }
            }
        };
        arrival_model
            .check(spec.task_types())
            .map_err(|source| ConfigError::Input {
                field: "arrivals".into(),
                source,
            })?;

        let carbon_model = match &mut file.carbon {
            CarbonSection::UniformIid { max_intensity } => CarbonModel::UniformIid {
                max_intensity: *max_intensity,
                seed: 0,
            },
            CarbonSection::Constant { value } => CarbonModel::Constant { value: *value },
            CarbonSection::CsvTrace {
                path,
                edge_region,
                cloud_regions,
            } => {
                if cloud_regions.len() != spec.clouds() {
                    return Err(invalid(
                        "carbon.cloud_regions",
                        format!(
                            "{} regions listed for {} clouds",
                            cloud_regions.len(),
                            spec.clouds()
                        ),
                    ));
                }
                *path = base_dir.join(&*path);
                let names: Vec<&str> = cloud_regions.iter().map(String::as_str).collect();
                let trace =
                    load_carbon_csv(path, edge_region, &names).map_err(|source| {
                        ConfigError::Input {
                            field: "carbon.path".into(),
                            source,
                        }
                    })?;
                CarbonModel::CsvTrace {
                    trace: Arc::new(trace),
                }
            }
        };
        carbon_model
            .check(spec.clouds())
            .map_err(|source| ConfigError::Input {
                field: "carbon".into(),
                source,
            })?;

        let exp = Self {
            file,
            arrival_model,
            carbon_model,
        };
        if exp.policies().contains(&PolicyKind::OracleExact) {
            exp.check_oracle()?;
        }
        Ok(exp)
    }

    /// Confirms the network fits the oracle's energy grid and size cap.
    pub fn check_oracle(&self) -> Result<(), ConfigError> {
        let spec = self.spec();
        let state = QueueState::empty(spec);
        let carbon = CarbonSnapshot::uniform(0.0, spec.clouds()).expect("zero intensity is valid");
        oracle_action(&state, spec, &carbon, &self.file.policy, &self.file.oracle)
            .map(|_| ())
            .map_err(|e| invalid("oracle", e.to_string()))
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.file.network
    }

    pub fn policies(&self) -> &[PolicyKind] {
        &self.file.experiment.policies
    }

    pub fn seeds(&self) -> &[u64] {
        &self.file.experiment.seeds
    }

    pub fn output_dir(&self) -> &Path {
        &self.file.experiment.output_dir
    }

    pub fn baseline(&self) -> PolicyKind {
        let ex = &self.file.experiment;
        ex.baseline.unwrap_or_else(|| {
            if ex.policies.contains(&PolicyKind::QueueLength) {
                PolicyKind::QueueLength
            } else {
                ex.policies[0]
            }
        })
    }

    pub fn run_config(&self, policy: PolicyKind, seed: u64) -> RunConfig {
        let ex = &self.file.experiment;
        RunConfig {
            spec: self.file.network.clone(),
            policy,
            policy_config: self.file.policy.clone(),
            oracle_config: self.file.oracle.clone(),
            arrival_model: self.arrival_model.clone(),
            carbon_model: self.carbon_model.clone(),
            horizon: ex.horizon,
            metrics_stride: ex.metrics_stride,
            seed,
            initial_state: None,
            record_actions: ex.record_actions,
        }
    }

    /// The resolved configuration narrowed to one policy and seed.
    pub fn config_echo(&self, policy: PolicyKind, seed: u64) -> Value {
        let mut file = self.file.clone();
        file.experiment.policies = vec![policy];
        file.experiment.seeds = vec![seed];
        file.experiment.baseline = None;
        serde_json::to_value(&file).expect("experiment file serialises")
    }

    /// Every listed policy on every seed, ordered seed-major.
    pub fn run_all(&self) -> Result<Vec<RunMetrics>, ExperimentError> {
        let jobs: Vec<(u64, PolicyKind)> = self
            .seeds()
            .iter()
            .flat_map(|&s| self.policies().iter().map(move |&p| (s, p)))
            .collect();
        let out = jobs
            .par_iter()
            .map(|&(s, p)| sim::run(&self.run_config(p, s)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(out)
    }

    pub fn compare(&self) -> Result<Comparison, ExperimentError> {
        let policies = self.policies().to_vec();
        if policies.len() < 2 {
            return Err(invalid("experiment.policies", "compare needs at least two policies").into());
        }
        let labels = unique_labels(&policies);
        let baseline = policies
            .iter()
            .position(|&p| p == self.baseline())
            .expect("baseline validated");
        let flat = self.run_all()?;
        let runs: Vec<Vec<RunMetrics>> = flat.chunks(policies.len()).map(<[_]>::to_vec).collect();
        let reductions = (0..policies.len())
            .map(|i| {
                let per_seed: Vec<f64> = runs
                    .iter()
                    .map(|r| {
                        output::reduction(r[i].cumulative_emissions, r[baseline].cumulative_emissions)
                    })
                    .collect();
                mean(&per_seed)
            })
            .collect();
        Ok(Comparison {
            labels,
            baseline,
            runs,
            reductions,
        })
    }

    /// V sweep of the first listed policy on every seed.
    pub fn sweep(&self) -> Result<SweepReport, ExperimentError> {
        let grid = &self.file.experiment.v_grid;
        if grid.is_empty() {
            return Err(invalid("experiment.v_grid", "sweep needs at least one V value").into());
        }
        let policy = self.policies()[0];
        let per_seed = self
            .seeds()
            .par_iter()
            .map(|&s| sim::v_sweep(&self.run_config(policy, s), grid))
            .collect::<Result<Vec<_>, _>>()?;
        let rows = (0..grid.len())
            .map(|k| {
                let same_v: Vec<SweepRow> = per_seed.iter().map(|r| r[k].clone()).collect();
                SweepRow::mean(&same_v)
            })
            .collect();
        let emissions_rho = per_seed
            .iter()
            .map(|r| {
                let y: Vec<f64> = r.iter().map(|x| x.time_average_emissions).collect();
                sim::spearman(grid, &y)
            })
            .collect();
        let edge_queue_rho = per_seed
            .iter()
            .map(|r| {
                let y: Vec<f64> = r.iter().map(SweepRow::mean_edge_queue).collect();
                sim::spearman(grid, &y)
            })
            .collect();
        Ok(SweepReport {
            policy,
            rows,
            per_seed,
            emissions_rho,
            edge_queue_rho,
        })
    }

    /// Greedy-versus-oracle audit on the first seed. Fails on the first slot
    /// where the oracle does worse than the greedy.
    pub fn audit(&self, slots: Option<u64>) -> Result<Vec<AuditRow>, ExperimentError> {
        self.check_oracle()?;
        let slots = slots.unwrap_or(self.file.experiment.audit_slots);
        if slots == 0 {
            return Err(invalid("audit_slots", "must be >= 1").into());
        }
        let cfg = self.run_config(PolicyKind::CarbonIntensity, self.seeds()[0]);
        let rows = sim::oracle_audit(&cfg, slots)?;
        if let Some(r) = rows.iter().find(|r| !r.oracle_dominates()) {
            return Err(ExperimentError::AuditFailed {
                slot: r.t,
                greedy: r.greedy_obj,
                oracle: r.oracle_obj,
            });
        }
        Ok(rows)
    }

    /// Writes `metrics.csv`, `summary.json` and, when recorded,
    /// `actions.csv` into `dir`.
    pub fn write_run(&self, metrics: &RunMetrics, dir: &Path) -> Result<(), ExperimentError> {
        fs::create_dir_all(dir).map_err(|e| out_err(dir, e))?;
        let path = dir.join("metrics.csv");
        output::write_metrics_csv(metrics, create(&path)?).map_err(|e| out_err(&path, e))?;
        let path = dir.join("summary.json");
        let summary = output::summary_json(metrics, &self.config_echo(metrics.policy, metrics.seed));
        output::write_json(&summary, create(&path)?).map_err(|e| out_err(&path, e))?;
        if self.file.experiment.record_actions {
            let path = dir.join("actions.csv");
            output::write_action_log_csv(metrics, create(&path)?).map_err(|e| out_err(&path, e))?;
        }
        Ok(())
    }

    /// Per-run outputs, one comparison CSV per seed and a summary JSON.
    pub fn write_comparison(&self, cmp: &Comparison, dir: &Path) -> Result<(), ExperimentError> {
        fs::create_dir_all(dir).map_err(|e| out_err(dir, e))?;
        for runs in &cmp.runs {
            let seed = runs[0].seed;
            for (label, m) in cmp.labels.iter().zip(runs) {
                self.write_run(m, &dir.join(format!("{label}_seed{seed}")))?;
            }
            let path = dir.join(format!("compare_seed{seed}.csv"));
            let refs: Vec<&RunMetrics> = runs.iter().collect();
            output::write_comparison_csv(&cmp.labels, &refs, &runs[cmp.baseline], create(&path)?)
                .map_err(|e| out_err(&path, e))?;
        }
        let per_policy: Vec<Value> = cmp
            .labels
            .iter()
            .enumerate()
            .map(|(i, label)| {
                serde_json::json!({
                    "label": label,
                    "reduction": cmp.reductions[i],
                    "cumulative_emissions": cmp.runs.iter().map(|r| r[i].cumulative_emissions).collect::<Vec<_>>(),
                })
            })
            .collect();
        let summary = serde_json::json!({
            "baseline": cmp.labels[cmp.baseline],
            "seeds": self.seeds(),
            "policies": per_policy,
            "config": serde_json::to_value(&self.file).expect("experiment file serialises"),
        });
        let path = dir.join("compare_summary.json");
        output::write_json(&summary, create(&path)?).map_err(|e| out_err(&path, e))
    }

    pub fn write_sweep(&self, report: &SweepReport, dir: &Path) -> Result<(), ExperimentError> {
        fs::create_dir_all(dir).map_err(|e| out_err(dir, e))?;
        let path = dir.join("sweep.csv");
        output::write_sweep_csv(&report.rows, create(&path)?).map_err(|e| out_err(&path, e))?;
        let summary = serde_json::json!({
            "report": report,
            "config": serde_json::to_value(&self.file).expect("experiment file serialises"),
        });
        let path = dir.join("sweep_summary.json");
        output::write_json(&summary, create(&path)?).map_err(|e| out_err(&path, e))
    }

    pub fn write_audit(&self, rows: &[AuditRow], dir: &Path) -> Result<(), ExperimentError> {
        fs::create_dir_all(dir).map_err(|e| out_err(dir, e))?;
        let path = dir.join("audit.csv");
        output::write_audit_csv(rows, create(&path)?).map_err(|e| out_err(&path, e))
    }
}

fn validate_section(ex: &ExperimentSection) -> Result<(), ConfigError> {
    if ex.policies.is_empty() {
        return Err(invalid("experiment.policies", "at least one policy is required"));
    }
    if let Some(b) = ex.baseline {
        if !ex.policies.contains(&b) {
            return Err(invalid(
                "experiment.baseline",
                format!("{b} is not among the listed policies"),
            ));
        }
    }
    if ex.horizon == 0 {
        return Err(invalid("experiment.horizon", "must be >= 1"));
    }
    if ex.metrics_stride == 0 {
        return Err(invalid("experiment.metrics_stride", "must be >= 1"));
    }
    if ex.seeds.is_empty() {
        return Err(invalid("experiment.seeds", "at least one seed is required"));
    }
    if let Some(v) = ex.v_grid.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(invalid(
            "experiment.v_grid",
            format!("V must be finite and >= 0, got {v}"),
        ));
    }
    Ok(())
}

fn unique_labels(policies: &[PolicyKind]) -> Vec<String> {
    let mut labels = Vec::with_capacity(policies.len());
    for (i, p) in policies.iter().enumerate() {
        let k = policies[..i].iter().filter(|q| *q == p).count();
        labels.push(if k == 0 {
            p.name().to_string()
        } else {
            format!("{}_{}", p.name(), k + 1)
        });
    }
    labels
}

fn create(path: &Path) -> Result<BufWriter<File>, ExperimentError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| out_err(path, e))
}

fn out_err(path: &Path, e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

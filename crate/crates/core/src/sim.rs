//! Slot-by-slot simulation loop, metrics, and checks of the drift bound.
//!
//! Within a slot the order is: draw intensities and arrivals, ask the policy
//! for an action, verify the energy budgets, account emissions, then advance
//! the queues. Arrivals drawn for slot `t` are visible to the policy but only
//! join the edge queues at the end of the slot.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    self, carbon_emissions, first_violation, Action, Arrivals, CarbonSnapshot, EnergyViolation,
    ModelError, NetworkSpec, QueueState,
};
use crate::oracle::{oracle_action, OracleConfig, OracleError};
use crate::policy::{
    carbon_intensity_policy, dpp_coefficients, dpp_objective, queue_length_policy, units_within,
    PolicyConfig,
};
use crate::workload::{
    generate_arrivals, generate_carbon, ArrivalModel, CarbonModel, WorkloadError,
};

/// Relative slack used when checking inequalities between floating sums.
pub const RELATIVE_SLACK: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("slot {slot}: {policy} policy action violates the {violation}")]
    Infeasible {
        slot: u64,
        policy: PolicyKind,
        violation: EnergyViolation,
    },
    #[error("slot {slot}: {policy} policy schedules more type-{task} tasks than {queue} holds")]
    Overdraw {
        slot: u64,
        policy: PolicyKind,
        task: usize,
        queue: String,
    },
    #[error("invalid run config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
}

impl SimError {
    /// True for failures of a policy's guarantees, as opposed to bad input.
    pub fn is_policy_violation(&self) -> bool {
        matches!(self, SimError::Infeasible { .. } | SimError::Overdraw { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    CarbonIntensity,
    QueueLength,
    OracleExact,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [
        PolicyKind::CarbonIntensity,
        PolicyKind::QueueLength,
        PolicyKind::OracleExact,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::CarbonIntensity => "carbon_intensity",
            PolicyKind::QueueLength => "queue_length",
            PolicyKind::OracleExact => "oracle_exact",
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown policy '{s}'"))
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: NetworkSpec,
    pub policy: PolicyKind,
    pub policy_config: PolicyConfig,
    pub oracle_config: OracleConfig,
    pub arrival_model: ArrivalModel,
    pub carbon_model: CarbonModel,
    pub horizon: u64,
    pub metrics_stride: u64,
    /// Keys every random stream of the run; overrides the models' own seeds.
    pub seed: u64,
    /// Zero queues when `None`.
    pub initial_state: Option<QueueState>,
    pub record_actions: bool,
}

impl RunConfig {
    pub fn new(
        spec: NetworkSpec,
        policy: PolicyKind,
        arrival_model: ArrivalModel,
        carbon_model: CarbonModel,
        horizon: u64,
    ) -> Self {
        Self {
            spec,
            policy,
            policy_config: PolicyConfig::default(),
            oracle_config: OracleConfig::default(),
            arrival_model,
            carbon_model,
            horizon,
            metrics_stride: 1,
            seed: 0,
            initial_state: None,
            record_actions: false,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.horizon == 0 {
            return Err(SimError::InvalidConfig("horizon must be >= 1".into()));
        }
        if self.metrics_stride == 0 {
            return Err(SimError::InvalidConfig("metrics_stride must be >= 1".into()));
        }
        self.policy_config.validate().map_err(SimError::InvalidConfig)?;
        self.oracle_config.validate()?;
        self.arrival_model.check(self.spec.task_types())?;
        self.carbon_model.check(self.spec.clouds())?;
        if let Some(s) = &self.initial_state {
            s.check_dims(&self.spec)?;
        }
        Ok(())
    }
}

/// One sampled slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotMetrics {
    pub t: u64,
    pub emissions: f64,
    pub cumulative_emissions: f64,
    /// Queue lengths at the start of the slot.
    pub edge_q: Vec<u64>,
    pub cloud_q: Vec<Vec<u64>>,
    /// Running time-average of each edge queue over slots `0..=t`.
    pub edge_q_time_avg: Vec<f64>,
    pub lyapunov: f64,
    pub drift: f64,
    pub dpp_value: f64,
    pub dpp_bound_rhs: f64,
}

/// One nonzero action entry, for audit replay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ActionLogEntry {
    pub t: u64,
    /// `'d'` for dispatch, `'w'` for work.
    pub kind: char,
    pub m: usize,
    pub n: usize,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub policy: PolicyKind,
    pub v: f64,
    pub seed: u64,
    pub horizon: u64,
    pub samples: Vec<SlotMetrics>,
    pub cumulative_emissions: f64,
    pub time_average_emissions: f64,
    pub avg_edge_queue: Vec<f64>,
    pub avg_cloud_queue: Vec<Vec<f64>>,
    /// `Qᵉ_m(T) / T`
    pub mean_rate_ratio: Vec<f64>,
    /// `Qᶜ_{m,n}(T) / T`
    pub cloud_mean_rate_ratio: Vec<Vec<f64>>,
    pub final_state: QueueState,
    pub b_estimate: f64,
    pub drift_bound_violations: u64,
    #[serde(skip)]
    pub action_log: Vec<ActionLogEntry>,
}

impl RunMetrics {
    pub fn max_mean_rate_ratio(&self) -> f64 {
        self.mean_rate_ratio
            .iter()
            .chain(self.cloud_mean_rate_ratio.iter().flatten())
            .copied()
            .fold(0.0, f64::max)
    }

    pub fn mean_edge_queue(&self) -> f64 {
        self.avg_edge_queue.iter().sum::<f64>() / self.avg_edge_queue.len() as f64
    }

    pub fn mean_cloud_queue(&self) -> f64 {
        let all: Vec<f64> = self.avg_cloud_queue.iter().flatten().copied().collect();
        all.iter().sum::<f64>() / all.len() as f64
    }
}

/// Drift-plus-penalty against its per-slot upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Compare `Δ(t) + V·C(t)` with
/// `B + Σ Qᵉ·a + Σ b·d + Σ c·w` for one transition.
#[allow(clippy::too_many_arguments)]
pub fn drift_bound_check(
    state: &QueueState,
    next_state: &QueueState,
    action: &Action,
    arrivals: &Arrivals,
    carbon: &CarbonSnapshot,
    spec: &NetworkSpec,
    config: &PolicyConfig,
    b: f64,
) -> Result<DriftCheck, ModelError> {
    let penalty = carbon_emissions(action, spec, carbon)?;
    let lhs = model::drift(state, next_state) + config.v * penalty;
    let coeffs = dpp_coefficients(state, spec, carbon, config);
    let inflow: f64 = state
        .edge
        .iter()
        .zip(&arrivals.count)
        .map(|(&q, &a)| q as f64 * a as f64)
        .sum();
    let rhs = b + inflow + dpp_objective(action, &coeffs);
    let scale = 1f64.max(lhs.abs()).max(rhs.abs());
    Ok(DriftCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + RELATIVE_SLACK * scale,
    })
}

/// A constant `B` large enough for the drift bound under any feasible action
/// and arrivals bounded by `max_arrivals`.
///
/// Uses `Σ x² ≤ (Σ x)²` for non-negative integers: per stage, the squared
/// terms are bounded by the square of the most units the budget admits.
pub fn compute_b(spec: &NetworkSpec, max_arrivals: u64) -> f64 {
    let a = max_arrivals as f64;
    let d_max = spec
        .edge_send_energy()
        .iter()
        .map(|&p| units_within(spec.edge_budget(), p))
        .max()
        .unwrap_or(0) as f64;
    let w_sq: f64 = (0..spec.clouds())
        .map(|n| {
            let w = (0..spec.task_types())
                .map(|m| units_within(spec.cloud_budget()[n], spec.cloud_proc_energy()[m][n]))
                .max()
                .unwrap_or(0) as f64;
            w * w
        })
        .sum();
    0.5 * (spec.task_types() as f64 * a * a + 2.0 * d_max * d_max + w_sq)
}

fn check_no_overdraw(
    slot: u64,
    policy: PolicyKind,
    state: &QueueState,
    action: &Action,
) -> Result<(), SimError> {
    for (m, &q) in state.edge.iter().enumerate() {
        if action.dispatched(m) > q {
            return Err(SimError::Overdraw {
                slot,
                policy,
                task: m,
                queue: format!("edge queue {m}"),
            });
        }
    }
    for (m, row) in state.cloud.iter().enumerate() {
        for (n, &q) in row.iter().enumerate() {
            if action.work[m][n] > q {
                return Err(SimError::Overdraw {
                    slot,
                    policy,
                    task: m,
                    queue: format!("cloud queue ({m},{n})"),
                });
            }
        }
    }
    Ok(())
}

fn decide(
    cfg: &RunConfig,
    state: &QueueState,
    carbon: &CarbonSnapshot,
    arrivals: &Arrivals,
) -> Result<Action, SimError> {
    Ok(match cfg.policy {
        PolicyKind::CarbonIntensity => {
            carbon_intensity_policy(state, &cfg.spec, carbon, arrivals, &cfg.policy_config)
        }
        PolicyKind::QueueLength => queue_length_policy(state, &cfg.spec),
        PolicyKind::OracleExact => oracle_action(
            state,
            &cfg.spec,
            carbon,
            &cfg.policy_config,
            &cfg.oracle_config,
        )?,
    })
}

pub fn run(cfg: &RunConfig) -> Result<RunMetrics, SimError> {
    cfg.validate()?;
    let spec = &cfg.spec;
    let (m_count, n_count) = (spec.task_types(), spec.clouds());
    let arrival_model = cfg.arrival_model.reseeded(cfg.seed);
    let carbon_model = cfg.carbon_model.reseeded(cfg.seed);
    let b = compute_b(spec, arrival_model.max_arrivals());
    let check_overdraw = cfg.policy != PolicyKind::OracleExact || cfg.oracle_config.queue_caps;

    let mut state = cfg
        .initial_state
        .clone()
        .unwrap_or_else(|| QueueState::empty(spec));
    let mut cumulative = 0.0;
    let mut edge_sum = vec![0u128; m_count];
    let mut cloud_sum = vec![vec![0u128; n_count]; m_count];
    let mut violations = 0u64;
    let mut samples = Vec::new();
    let mut action_log = Vec::new();

    for t in 0..cfg.horizon {
        let carbon = generate_carbon(&carbon_model, n_count, t)?;
        let arrivals = generate_arrivals(&arrival_model, m_count, t);
        let action = decide(cfg, &state, &carbon, &arrivals)?;

        if let Some(violation) = first_violation(&action, spec)? {
            return Err(SimError::Infeasible {
                slot: t,
                policy: cfg.policy,
                violation,
            });
        }
        if check_overdraw {
            check_no_overdraw(t, cfg.policy, &state, &action)?;
        }

        let emissions = carbon_emissions(&action, spec, &carbon)?;
        cumulative += emissions;
        let next = model::step(&state, &action, &arrivals)?;
        let bound = drift_bound_check(
            &state,
            &next,
            &action,
            &arrivals,
            &carbon,
            spec,
            &cfg.policy_config,
            b,
        )?;
        if !bound.holds {
            violations += 1;
        }

        for (acc, &q) in edge_sum.iter_mut().zip(&state.edge) {
            *acc += q as u128;
        }
        for (acc_row, q_row) in cloud_sum.iter_mut().zip(&state.cloud) {
            for (acc, &q) in acc_row.iter_mut().zip(q_row) {
                *acc += q as u128;
            }
        }

        if t % cfg.metrics_stride == 0 || t + 1 == cfg.horizon {
            let elapsed = (t + 1) as f64;
            samples.push(SlotMetrics {
                t,
                emissions,
                cumulative_emissions: cumulative,
                edge_q: state.edge.clone(),
                cloud_q: state.cloud.clone(),
                edge_q_time_avg: edge_sum.iter().map(|&s| s as f64 / elapsed).collect(),
                lyapunov: model::lyapunov(&state),
                drift: model::drift(&state, &next),
                dpp_value: bound.lhs,
                dpp_bound_rhs: bound.rhs,
            });
        }
        if cfg.record_actions {
            log_action(t, &action, &mut action_log);
        }
        state = next;
    }

    let horizon = cfg.horizon as f64;
    let per_slot = |s: u128| s as f64 / horizon;
    Ok(RunMetrics {
        policy: cfg.policy,
        v: cfg.policy_config.v,
        seed: cfg.seed,
        horizon: cfg.horizon,
        samples,
        cumulative_emissions: cumulative,
        time_average_emissions: cumulative / horizon,
        avg_edge_queue: edge_sum.iter().map(|&s| per_slot(s)).collect(),
        avg_cloud_queue: cloud_sum
            .iter()
            .map(|row| row.iter().map(|&s| per_slot(s)).collect())
            .collect(),
        mean_rate_ratio: state.edge.iter().map(|&q| q as f64 / horizon).collect(),
        cloud_mean_rate_ratio: state
            .cloud
            .iter()
            .map(|row| row.iter().map(|&q| q as f64 / horizon).collect())
            .collect(),
        final_state: state,
        b_estimate: b,
        drift_bound_violations: violations,
        action_log,
    })
}

fn log_action(t: u64, action: &Action, log: &mut Vec<ActionLogEntry>) {
    for (kind, grid) in [('d', &action.dispatch), ('w', &action.work)] {
        for (m, row) in grid.iter().enumerate() {
            for (n, &count) in row.iter().enumerate() {
                if count > 0 {
                    log.push(ActionLogEntry {
                        t,
                        kind,
                        m,
                        n,
                        count,
                    });
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub v: f64,
    pub time_average_emissions: f64,
    pub avg_edge_queue: Vec<f64>,
    pub avg_cloud_queue: Vec<Vec<f64>>,
}

impl SweepRow {
    fn from_metrics(m: &RunMetrics) -> Self {
        Self {
            v: m.v,
            time_average_emissions: m.time_average_emissions,
            avg_edge_queue: m.avg_edge_queue.clone(),
            avg_cloud_queue: m.avg_cloud_queue.clone(),
        }
    }

    /// Element-wise mean of rows that share the same `v`.
    pub fn mean(rows: &[SweepRow]) -> SweepRow {
        let k = rows.len() as f64;
        let first = &rows[0];
        let mut out = SweepRow {
            v: first.v,
            time_average_emissions: 0.0,
            avg_edge_queue: vec![0.0; first.avg_edge_queue.len()],
            avg_cloud_queue: vec![vec![0.0; first.avg_cloud_queue[0].len()]; first.avg_cloud_queue.len()],
        };
        for r in rows {
            out.time_average_emissions += r.time_average_emissions / k;
            for (o, x) in out.avg_edge_queue.iter_mut().zip(&r.avg_edge_queue) {
                *o += x / k;
            }
            for (orow, xrow) in out.avg_cloud_queue.iter_mut().zip(&r.avg_cloud_queue) {
                for (o, x) in orow.iter_mut().zip(xrow) {
                    *o += x / k;
                }
            }
        }
        out
    }

    pub fn mean_edge_queue(&self) -> f64 {
        self.avg_edge_queue.iter().sum::<f64>() / self.avg_edge_queue.len() as f64
    }
}

/// One run per `V` on the base config's seed, executed in parallel. Rows come
/// back in the order of `v_values`.
pub fn v_sweep(base: &RunConfig, v_values: &[f64]) -> Result<Vec<SweepRow>, SimError> {
    if v_values.is_empty() {
        return Err(SimError::InvalidConfig("V grid is empty".into()));
    }
    if let Some(v) = v_values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(SimError::InvalidConfig(format!("V must be finite and >= 0, got {v}")));
    }
    v_values
        .par_iter()
        .map(|&v| {
            let mut cfg = base.clone();
            cfg.policy_config.v = v;
            run(&cfg).map(|m| SweepRow::from_metrics(&m))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditRow {
    pub t: u64,
    pub greedy_obj: f64,
    pub oracle_obj: f64,
    /// `greedy_obj − oracle_obj`; non-negative up to rounding.
    pub gap: f64,
}

impl AuditRow {
    /// Oracle no worse than greedy, allowing for summation-order rounding.
    pub fn oracle_dominates(&self) -> bool {
        let scale = 1f64.max(self.greedy_obj.abs()).max(self.oracle_obj.abs());
        self.oracle_obj <= self.greedy_obj + RELATIVE_SLACK * scale
    }
}

/// Follow the carbon-intensity policy for `slots` slots and, in each,
/// compare its bound objective with the exact per-slot minimum.
pub fn oracle_audit(cfg: &RunConfig, slots: u64) -> Result<Vec<AuditRow>, SimError> {
    cfg.validate()?;
    let spec = &cfg.spec;
    let arrival_model = cfg.arrival_model.reseeded(cfg.seed);
    let carbon_model = cfg.carbon_model.reseeded(cfg.seed);
    let mut state = cfg
        .initial_state
        .clone()
        .unwrap_or_else(|| QueueState::empty(spec));
    let mut rows = Vec::with_capacity(slots as usize);
    for t in 0..slots {
        let carbon = generate_carbon(&carbon_model, spec.clouds(), t)?;
        let arrivals = generate_arrivals(&arrival_model, spec.task_types(), t);
        let greedy = carbon_intensity_policy(&state, spec, &carbon, &arrivals, &cfg.policy_config);
        let exact = oracle_action(&state, spec, &carbon, &cfg.policy_config, &cfg.oracle_config)?;
        let coeffs = dpp_coefficients(&state, spec, &carbon, &cfg.policy_config);
        let greedy_obj = dpp_objective(&greedy, &coeffs);
        let oracle_obj = dpp_objective(&exact, &coeffs);
        rows.push(AuditRow {
            t,
            greedy_obj,
            oracle_obj,
            gap: greedy_obj - oracle_obj,
        });
        state = model::step(&state, &greedy, &arrivals)?;
    }
    Ok(rows)
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties. `NaN` when either
/// side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    fn zero_cfg(policy: PolicyKind, horizon: u64) -> RunConfig {
        RunConfig::new(
            presets::ai_training(5),
            policy,
            ArrivalModel::Constant { value: 0 },
            CarbonModel::Constant { value: 300.0 },
            horizon,
        )
    }

    #[test]
    fn single_idle_slot() {
        let m = run(&zero_cfg(PolicyKind::QueueLength, 1)).unwrap();
        assert_eq!(m.cumulative_emissions, 0.0);
        assert!(m.final_state.is_empty());
        assert_eq!(m.final_state.t, 1);
        assert_eq!(m.samples.len(), 1);
    }

    #[test]
    fn invalid_configs() {
        assert!(matches!(
            run(&zero_cfg(PolicyKind::QueueLength, 0)),
            Err(SimError::InvalidConfig(_))
        ));
        let mut c = zero_cfg(PolicyKind::QueueLength, 3);
        c.metrics_stride = 0;
        assert!(run(&c).is_err());
        c.metrics_stride = 1;
        c.policy_config.v = -1.0;
        assert!(run(&c).is_err());
    }

    #[test]
    fn stride_sampling_keeps_last_slot() {
        let mut c = zero_cfg(PolicyKind::CarbonIntensity, 10);
        c.metrics_stride = 4;
        let m = run(&c).unwrap();
        let ts: Vec<u64> = m.samples.iter().map(|s| s.t).collect();
        assert_eq!(ts, vec![0, 4, 8, 9]);
    }

    #[test]
    fn compute_b_examples() {
        let spec = NetworkSpec::new(vec![1.0], vec![vec![1.0]], 0.0, vec![0.0]).unwrap();
        assert_eq!(compute_b(&spec, 0), 0.0);
        let spec = NetworkSpec::new(vec![1.0], vec![vec![2.0]], 3.5, vec![3.0]).unwrap();
        assert_eq!(compute_b(&spec, 2), 11.5);
    }

    #[test]
    fn drift_check_idle_slot() {
        let spec = presets::ai_training(2);
        let s = QueueState::empty(&spec);
        let a = Action::zero(&spec);
        let arr = Arrivals::zero(&spec);
        let next = model::step(&s, &a, &arr).unwrap();
        let c = CarbonSnapshot::uniform(100.0, 2).unwrap();
        let r = drift_bound_check(&s, &next, &a, &arr, &c, &spec, &PolicyConfig::default(), 4.0)
            .unwrap();
        assert_eq!((r.lhs, r.rhs, r.holds), (0.0, 4.0, true));
    }

    #[test]
    fn drift_check_needs_b() {
        let spec = presets::ai_training(1);
        let s = QueueState::empty(&spec);
        let a = Action::zero(&spec);
        let mut arr = Arrivals::zero(&spec);
        arr.count[0] = 1;
        let next = model::step(&s, &a, &arr).unwrap();
        let c = CarbonSnapshot::uniform(100.0, 1).unwrap();
        let r = drift_bound_check(&s, &next, &a, &arr, &c, &spec, &PolicyConfig::default(), 0.0)
            .unwrap();
        assert_eq!(r.lhs - r.rhs, 0.5);
        assert!(!r.holds);
    }

    #[test]
    fn spearman_basics() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), -1.0);
        assert!(spearman(&[1.0, 2.0], &[5.0, 5.0]).is_nan());
        // tie handling: ranks of [1, 1, 2] are [1.5, 1.5, 3]
        assert_eq!(ranks(&[1.0, 1.0, 2.0]), vec![1.5, 1.5, 3.0]);
    }

    #[test]
    fn audit_of_idle_network_is_zero() {
        let rows = oracle_audit(&zero_cfg(PolicyKind::CarbonIntensity, 1), 5).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(|r| r.greedy_obj == 0.0 && r.oracle_obj == 0.0 && r.gap == 0.0));
    }

    #[test]
    fn empty_v_grid_rejected() {
        assert!(v_sweep(&zero_cfg(PolicyKind::CarbonIntensity, 2), &[]).is_err());
    }

    #[test]
    fn policy_names_round_trip() {
        for p in PolicyKind::ALL {
            assert_eq!(p.name().parse::<PolicyKind>().unwrap(), p);
        }
        assert!("greedy".parse::<PolicyKind>().is_err());
    }
}

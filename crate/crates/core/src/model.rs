//! Static network description, virtual queue state, scheduling actions and
//! the per-slot accounting (energy, emissions, queue dynamics).
//!
//! The network is one edge server feeding `N` clouds with `M` task types.
//! Edge queue `m` holds type-`m` tasks waiting to be dispatched; cloud queue
//! `(m, n)` holds type-`m` tasks waiting to be processed at cloud `n`.
//!
//! Indices are zero-based throughout: type `m ∈ 0..M`, cloud `n ∈ 0..N`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: {what} has length {found}, expected {expected}")]
    Dimension {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("invalid carbon snapshot: {0}")]
    InvalidCarbon(String),
    #[error("queue length overflow at {0}")]
    Overflow(String),
}

fn check_len(what: impl Into<String>, expected: usize, found: usize) -> Result<(), ModelError> {
    if expected == found {
        Ok(())
    } else {
        Err(ModelError::Dimension {
            what: what.into(),
            expected,
            found,
        })
    }
}

fn check_matrix<T>(what: &str, rows: usize, cols: usize, m: &[Vec<T>]) -> Result<(), ModelError> {
    check_len(what, rows, m.len())?;
    for (i, row) in m.iter().enumerate() {
        check_len(format!("{what}[{i}]"), cols, row.len())?;
    }
    Ok(())
}

/// Static network parameters. Energies are in kW·h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNetworkSpec", into = "RawNetworkSpec")]
pub struct NetworkSpec {
    edge_send_energy: Vec<f64>,
    cloud_proc_energy: Vec<Vec<f64>>,
    edge_budget: f64,
    cloud_budget: Vec<f64>,
    energy_slack: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetworkSpec {
    edge_send_energy: Vec<f64>,
    cloud_proc_energy: Vec<Vec<f64>>,
    edge_budget: f64,
    cloud_budget: Vec<f64>,
    #[serde(default)]
    energy_slack: f64,
}

impl TryFrom<RawNetworkSpec> for NetworkSpec {
    type Error = ModelError;

    fn try_from(raw: RawNetworkSpec) -> Result<Self, Self::Error> {
        NetworkSpec::new(
            raw.edge_send_energy,
            raw.cloud_proc_energy,
            raw.edge_budget,
            raw.cloud_budget,
        )?
        .with_energy_slack(raw.energy_slack)
    }
}

impl From<NetworkSpec> for RawNetworkSpec {
    fn from(s: NetworkSpec) -> Self {
        RawNetworkSpec {
            edge_send_energy: s.edge_send_energy,
            cloud_proc_energy: s.cloud_proc_energy,
            edge_budget: s.edge_budget,
            cloud_budget: s.cloud_budget,
            energy_slack: s.energy_slack,
        }
    }
}

impl NetworkSpec {
    /// `cloud_proc_energy` is indexed `[m][n]`.
    pub fn new(
        edge_send_energy: Vec<f64>,
        cloud_proc_energy: Vec<Vec<f64>>,
        edge_budget: f64,
        cloud_budget: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let m = edge_send_energy.len();
        let n = cloud_budget.len();
        if m == 0 {
            return Err(ModelError::InvalidSpec("at least one task type is required".into()));
        }
        if n == 0 {
            return Err(ModelError::InvalidSpec("at least one cloud is required".into()));
        }
        check_matrix("cloud_proc_energy", m, n, &cloud_proc_energy)?;

        let positive = |x: f64| x.is_finite() && x > 0.0;
        let budget_ok = |x: f64| x.is_finite() && x >= 0.0;
        if let Some(i) = edge_send_energy.iter().position(|&x| !positive(x)) {
            return Err(ModelError::InvalidSpec(format!(
                "edge_send_energy[{i}] must be finite and > 0"
            )));
        }
        for (i, row) in cloud_proc_energy.iter().enumerate() {
            if let Some(j) = row.iter().position(|&x| !positive(x)) {
                return Err(ModelError::InvalidSpec(format!(
                    "cloud_proc_energy[{i}][{j}] must be finite and > 0"
                )));
            }
        }
        if !budget_ok(edge_budget) {
            return Err(ModelError::InvalidSpec("edge_budget must be finite and >= 0".into()));
        }
        if let Some(j) = cloud_budget.iter().position(|&x| !budget_ok(x)) {
            return Err(ModelError::InvalidSpec(format!(
                "cloud_budget[{j}] must be finite and >= 0"
            )));
        }
        Ok(Self {
            edge_send_energy,
            cloud_proc_energy,
            edge_budget,
            cloud_budget,
            energy_slack: 0.0,
        })
    }

    /// Absolute slack (kW·h) tolerated by [`is_feasible`]. Defaults to 0.
    pub fn with_energy_slack(mut self, slack: f64) -> Result<Self, ModelError> {
        if !(slack.is_finite() && slack >= 0.0) {
            return Err(ModelError::InvalidSpec("energy_slack must be finite and >= 0".into()));
        }
        self.energy_slack = slack;
        Ok(self)
    }

    /// Homogeneous clouds sharing one per-type processing cost vector.
    pub fn homogeneous(
        edge_send_energy: Vec<f64>,
        proc_energy_per_type: Vec<f64>,
        edge_budget: f64,
        clouds: usize,
        cloud_budget: f64,
    ) -> Result<Self, ModelError> {
        let cloud_proc = proc_energy_per_type
            .iter()
            .map(|&p| vec![p; clouds])
            .collect();
        Self::new(edge_send_energy, cloud_proc, edge_budget, vec![cloud_budget; clouds])
    }

    pub fn task_types(&self) -> usize {
        self.edge_send_energy.len()
    }

    pub fn clouds(&self) -> usize {
        self.cloud_budget.len()
    }

    pub fn edge_send_energy(&self) -> &[f64] {
        &self.edge_send_energy
    }

    pub fn cloud_proc_energy(&self) -> &[Vec<f64>] {
        &self.cloud_proc_energy
    }

    pub fn edge_budget(&self) -> f64 {
        self.edge_budget
    }

    pub fn cloud_budget(&self) -> &[f64] {
        &self.cloud_budget
    }

    pub fn energy_slack(&self) -> f64 {
        self.energy_slack
    }
}

/// Lengths of every virtual queue at the start of slot `t`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueueState {
    pub t: u64,
    /// `edge[m]`
    pub edge: Vec<u64>,
    /// `cloud[m][n]`
    pub cloud: Vec<Vec<u64>>,
}

impl QueueState {
    pub fn empty(spec: &NetworkSpec) -> Self {
        Self {
            t: 0,
            edge: vec![0; spec.task_types()],
            cloud: vec![vec![0; spec.clouds()]; spec.task_types()],
        }
    }

    pub fn check_dims(&self, spec: &NetworkSpec) -> Result<(), ModelError> {
        check_len("edge queue", spec.task_types(), self.edge.len())?;
        check_matrix("cloud queue", spec.task_types(), spec.clouds(), &self.cloud)
    }

    pub fn is_empty(&self) -> bool {
        self.edge.iter().all(|&q| q == 0) && self.cloud.iter().flatten().all(|&q| q == 0)
    }

    /// Iterator over all queue lengths, edge queues first.
    pub fn lengths(&self) -> impl Iterator<Item = u64> + '_ {
        self.edge
            .iter()
            .copied()
            .chain(self.cloud.iter().flatten().copied())
    }
}

/// Per-slot decision: `dispatch[m][n]` tasks sent from the edge to cloud `n`
/// and `work[m][n]` tasks processed by cloud `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub dispatch: Vec<Vec<u64>>,
    pub work: Vec<Vec<u64>>,
}

impl Action {
    pub fn zero(spec: &NetworkSpec) -> Self {
        let (m, n) = (spec.task_types(), spec.clouds());
        Self {
            dispatch: vec![vec![0; n]; m],
            work: vec![vec![0; n]; m],
        }
    }

    pub fn check_dims(&self, spec: &NetworkSpec) -> Result<(), ModelError> {
        check_matrix("dispatch", spec.task_types(), spec.clouds(), &self.dispatch)?;
        check_matrix("work", spec.task_types(), spec.clouds(), &self.work)
    }

    pub fn is_zero(&self) -> bool {
        self.dispatch.iter().flatten().all(|&x| x == 0) && self.work.iter().flatten().all(|&x| x == 0)
    }

    /// Total dispatched tasks of type `m` across all clouds.
    pub fn dispatched(&self, m: usize) -> u64 {
        self.dispatch[m].iter().sum()
    }
}

/// Carbon intensities (gCO2/kW·h) of the edge grid and each cloud grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarbonSnapshot {
    pub edge: f64,
    pub cloud: Vec<f64>,
}

impl CarbonSnapshot {
    pub fn new(edge: f64, cloud: Vec<f64>) -> Result<Self, ModelError> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(edge) {
            return Err(ModelError::InvalidCarbon(format!("edge intensity {edge}")));
        }
        if let Some((n, x)) = cloud.iter().enumerate().find(|(_, &x)| !ok(x)) {
            return Err(ModelError::InvalidCarbon(format!("cloud[{n}] intensity {x}")));
        }
        Ok(Self { edge, cloud })
    }

    pub fn uniform(value: f64, clouds: usize) -> Result<Self, ModelError> {
        Self::new(value, vec![value; clouds])
    }

    pub fn check_dims(&self, spec: &NetworkSpec) -> Result<(), ModelError> {
        check_len("cloud intensity", spec.clouds(), self.cloud.len())
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            edge: self.edge * k,
            cloud: self.cloud.iter().map(|c| c * k).collect(),
        }
    }
}

/// Tasks arriving at the edge during one slot, per type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arrivals {
    pub count: Vec<u64>,
}

impl Arrivals {
    pub fn zero(spec: &NetworkSpec) -> Self {
        Self {
            count: vec![0; spec.task_types()],
        }
    }

    pub fn check_dims(&self, spec: &NetworkSpec) -> Result<(), ModelError> {
        check_len("arrivals", spec.task_types(), self.count.len())
    }
}

/// Energy drawn in one slot by the edge and by each cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTotals {
    pub edge: f64,
    pub cloud: Vec<f64>,
}

pub fn energy_totals(action: &Action, spec: &NetworkSpec) -> Result<EnergyTotals, ModelError> {
    action.check_dims(spec)?;
    let edge = action
        .dispatch
        .iter()
        .zip(spec.edge_send_energy())
        .map(|(row, &p)| row.iter().map(|&d| d as f64 * p).sum::<f64>())
        .sum();
    let cloud = (0..spec.clouds())
        .map(|n| {
            (0..spec.task_types())
                .map(|m| action.work[m][n] as f64 * spec.cloud_proc_energy[m][n])
                .sum()
        })
        .collect();
    Ok(EnergyTotals { edge, cloud })
}

/// Which energy constraint an action breaks, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyViolation {
    Edge,
    Cloud(usize),
}

impl std::fmt::Display for EnergyViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EnergyViolation::Edge => write!(f, "edge energy budget"),
            EnergyViolation::Cloud(n) => write!(f, "cloud {n} energy budget"),
        }
    }
}

/// First violated budget, checked edge first then clouds in index order.
pub fn first_violation(
    action: &Action,
    spec: &NetworkSpec,
) -> Result<Option<EnergyViolation>, ModelError> {
    let totals = energy_totals(action, spec)?;
    let slack = spec.energy_slack();
    if totals.edge > spec.edge_budget() + slack {
        return Ok(Some(EnergyViolation::Edge));
    }
    Ok(totals
        .cloud
        .iter()
        .zip(spec.cloud_budget())
        .position(|(&used, &cap)| used > cap + slack)
        .map(EnergyViolation::Cloud))
}

pub fn is_feasible(action: &Action, spec: &NetworkSpec) -> Result<bool, ModelError> {
    Ok(first_violation(action, spec)?.is_none())
}

/// Emissions in gCO2 for one slot.
pub fn carbon_emissions(
    action: &Action,
    spec: &NetworkSpec,
    carbon: &CarbonSnapshot,
) -> Result<f64, ModelError> {
    carbon.check_dims(spec)?;
    let totals = energy_totals(action, spec)?;
    let cloud: f64 = totals
        .cloud
        .iter()
        .zip(&carbon.cloud)
        .map(|(e, c)| e * c)
        .sum();
    Ok(carbon.edge * totals.edge + cloud)
}

/// Advance the queues by one slot.
///
/// Over-draining actions are accepted: a queue never goes below zero, and
/// dispatched tasks join the cloud queue whether or not the edge held them.
/// Arrivals join the edge queue after the slot's departures.
pub fn step(
    state: &QueueState,
    action: &Action,
    arrivals: &Arrivals,
) -> Result<QueueState, ModelError> {
    let m_count = state.edge.len();
    let n_count = state.cloud.first().map_or(0, Vec::len);
    check_len("arrivals", m_count, arrivals.count.len())?;
    check_matrix("dispatch", m_count, n_count, &action.dispatch)?;
    check_matrix("work", m_count, n_count, &action.work)?;
    check_matrix("cloud queue", m_count, n_count, &state.cloud)?;

    let overflow = |what: String| ModelError::Overflow(what);
    let mut edge = Vec::with_capacity(m_count);
    for m in 0..m_count {
        let sent = action.dispatch[m]
            .iter()
            .try_fold(0u64, |acc, &d| acc.checked_add(d))
            .ok_or_else(|| overflow(format!("dispatch total of type {m}")))?;
        let q = state.edge[m]
            .saturating_sub(sent)
            .checked_add(arrivals.count[m])
            .ok_or_else(|| overflow(format!("edge queue {m}")))?;
        edge.push(q);
    }
    let mut cloud = Vec::with_capacity(m_count);
    for m in 0..m_count {
        let row = (0..n_count)
            .map(|n| {
                state.cloud[m][n]
                    .saturating_sub(action.work[m][n])
                    .checked_add(action.dispatch[m][n])
                    .ok_or_else(|| overflow(format!("cloud queue ({m},{n})")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        cloud.push(row);
    }
    let t = state
        .t
        .checked_add(1)
        .ok_or_else(|| overflow("slot counter".into()))?;
    Ok(QueueState { t, edge, cloud })
}

fn sum_of_squares(state: &QueueState) -> u128 {
    state.lengths().map(|q| (q as u128) * (q as u128)).sum()
}

/// Half the sum of squared queue lengths.
pub fn lyapunov(state: &QueueState) -> f64 {
    sum_of_squares(state) as f64 * 0.5
}

/// One-slot Lyapunov drift `L(next) − L(state)`, computed exactly in integers
/// before the final conversion.
pub fn drift(state: &QueueState, next: &QueueState) -> f64 {
    let before = sum_of_squares(state) as i128;
    let after = sum_of_squares(next) as i128;
    (after - before) as f64 * 0.5
}

/// Ready-made network instances.
pub mod presets {
    use super::NetworkSpec;

    /// Per-task processing energy (kW·h) of the five ImageNet training
    /// workloads: ResNet50, InceptionV3, DenseNet121, SqueezeNet, MobileNetV2.
    pub const AI_TRAINING_PROC_ENERGY: [f64; 5] = [74.0, 97.0, 54.0, 16.0, 5.8];
    /// Per-task edge transmission energy (kW·h), identical for every type.
    pub const AI_TRAINING_SEND_ENERGY: f64 = 3.45;
    pub const AI_TRAINING_EDGE_BUDGET: f64 = 4000.0;
    pub const AI_TRAINING_CLOUD_BUDGET: f64 = 30000.0;

    /// Five AI training task types over `clouds` homogeneous clouds.
    pub fn ai_training(clouds: usize) -> NetworkSpec {
        NetworkSpec::homogeneous(
            vec![AI_TRAINING_SEND_ENERGY; 5],
            AI_TRAINING_PROC_ENERGY.to_vec(),
            AI_TRAINING_EDGE_BUDGET,
            clouds,
            AI_TRAINING_CLOUD_BUDGET,
        )
        .expect("preset is valid")
    }
}

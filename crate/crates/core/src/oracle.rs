//! Exact per-slot minimiser of the drift-plus-penalty bound.
//!
//! The edge and each cloud have independent budgets, so the slot problem
//! splits into one knapsack for the edge and one per cloud. Energies are put
//! on an integer grid of `quantum` kW·h and solved with [`crate::knapsack`].
//! Intended for desk-scale instances; the grid size is capped.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knapsack::{self, Item};
use crate::model::{Action, CarbonSnapshot, NetworkSpec, QueueState};
use crate::policy::{dpp_coefficients, PolicyConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("instance too large for oracle: {what} needs {cells} grid cells (limit {limit})")]
    TooLarge { what: String, cells: u64, limit: u64 },
    #[error("{what} = {value} kW·h is not a multiple of the oracle quantum {quantum}")]
    NotOnGrid { what: String, value: f64, quantum: f64 },
    #[error("invalid oracle config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    /// Energy grid resolution in kW·h.
    pub quantum: f64,
    /// Largest allowed budget, in grid cells.
    pub max_cells: u64,
    /// Cap each unit count by what the queues hold. Without caps the
    /// subproblems are pure unbounded knapsacks.
    pub queue_caps: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            quantum: 0.01,
            max_cells: 10_000_000,
            queue_caps: true,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<(), OracleError> {
        if !(self.quantum.is_finite() && self.quantum > 0.0) {
            return Err(OracleError::InvalidConfig(format!(
                "quantum must be > 0, got {}",
                self.quantum
            )));
        }
        Ok(())
    }

    fn weight(&self, what: impl FnOnce() -> String, energy: f64) -> Result<u64, OracleError> {
        let units = (energy / self.quantum).round();
        let err = || OracleError::NotOnGrid {
            what: what(),
            value: energy,
            quantum: self.quantum,
        };
        if units < 1.0 || (units * self.quantum - energy).abs() > 1e-9 * energy.max(1.0) {
            return Err(err());
        }
        Ok(units as u64)
    }

    fn capacity(&self, what: impl FnOnce() -> String, budget: f64) -> Result<u64, OracleError> {
        let cells = (budget / self.quantum + 1e-9).floor();
        if cells > self.max_cells as f64 {
            return Err(OracleError::TooLarge {
                what: what(),
                cells: cells as u64,
                limit: self.max_cells,
            });
        }
        Ok(cells as u64)
    }
}

/// Exact dispatch matrix minimising `Σ b·d` under the edge budget.
///
/// Every cloud column of one type has the same energy cost, so only the
/// cloud with the smallest coefficient (lowest index on ties) can be part of
/// an optimum.
pub fn knapsack_oracle_edge(
    state: &QueueState,
    spec: &NetworkSpec,
    carbon: &CarbonSnapshot,
    config: &PolicyConfig,
    oracle: &OracleConfig,
) -> Result<Vec<Vec<u64>>, OracleError> {
    oracle.validate()?;
    let coeffs = dpp_coefficients(state, spec, carbon, config);
    let capacity = oracle.capacity(|| "edge budget".into(), spec.edge_budget())?;

    let mut items = Vec::with_capacity(spec.task_types());
    let mut best_cloud = Vec::with_capacity(spec.task_types());
    for (m, &pe) in spec.edge_send_energy().iter().enumerate() {
        let row = &coeffs.b[m];
        let n = (0..row.len())
            .min_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)))
            .expect("at least one cloud");
        best_cloud.push(n);
        items.push(Item {
            weight: oracle.weight(|| format!("edge_send_energy[{m}]"), pe)?,
            value: row[n],
            cap: oracle.queue_caps.then_some(state.edge[m]),
        });
    }

    let energies = spec.edge_send_energy();
    let counts = solve_within(&items, capacity, spec.edge_budget() + spec.energy_slack(), |x| {
        x.iter().zip(energies).map(|(&k, &p)| k as f64 * p).sum()
    });
    let mut dispatch = vec![vec![0; spec.clouds()]; spec.task_types()];
    for (m, &x) in counts.iter().enumerate() {
        dispatch[m][best_cloud[m]] = x;
    }
    Ok(dispatch)
}

/// Exact work column for cloud `n` minimising `Σ_m c[m][n]·w[m][n]`.
pub fn knapsack_oracle_cloud(
    n: usize,
    state: &QueueState,
    spec: &NetworkSpec,
    carbon: &CarbonSnapshot,
    config: &PolicyConfig,
    oracle: &OracleConfig,
) -> Result<Vec<u64>, OracleError> {
    oracle.validate()?;
    let coeffs = dpp_coefficients(state, spec, carbon, config);
    let capacity = oracle.capacity(|| format!("cloud {n} budget"), spec.cloud_budget()[n])?;
    let items = (0..spec.task_types())
        .map(|m| {
            Ok(Item {
                weight: oracle.weight(
                    || format!("cloud_proc_energy[{m}][{n}]"),
                    spec.cloud_proc_energy()[m][n],
                )?,
                value: coeffs.c[m][n],
                cap: oracle.queue_caps.then_some(state.cloud[m][n]),
            })
        })
        .collect::<Result<Vec<_>, OracleError>>()?;
    let energies: Vec<f64> = (0..spec.task_types())
        .map(|m| spec.cloud_proc_energy()[m][n])
        .collect();
    let limit = spec.cloud_budget()[n] + spec.energy_slack();
    Ok(solve_within(&items, capacity, limit, |x| {
        x.iter().zip(&energies).map(|(&k, &p)| k as f64 * p).sum()
    }))
}

/// Grid optimum whose floating-point energy, summed as the feasibility check
/// sums it, stays within `limit`. A total landing exactly on the budget can
/// round above it; such solutions are dropped by shrinking the grid budget.
fn solve_within(
    items: &[Item],
    mut capacity: u64,
    limit: f64,
    energy: impl Fn(&[u64]) -> f64,
) -> Vec<u64> {
    loop {
        let counts = knapsack::solve_min(items, capacity);
        if energy(&counts) <= limit || capacity == 0 {
            return counts;
        }
        capacity -= 1;
    }
}

/// Full exact action: edge problem plus every cloud problem.
pub fn oracle_action(
    state: &QueueState,
    spec: &NetworkSpec,
    carbon: &CarbonSnapshot,
    config: &PolicyConfig,
    oracle: &OracleConfig,
) -> Result<Action, OracleError> {
    let dispatch = knapsack_oracle_edge(state, spec, carbon, config, oracle)?;
    let mut work = vec![vec![0; spec.clouds()]; spec.task_types()];
    for n in 0..spec.clouds() {
        let column = knapsack_oracle_cloud(n, state, spec, carbon, config, oracle)?;
        for (row, x) in work.iter_mut().zip(column) {
            row[n] = x;
        }
    }
    Ok(Action { dispatch, work })
}

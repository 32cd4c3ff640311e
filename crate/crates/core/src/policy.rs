//! Scheduling policies: the drift-plus-penalty carbon-intensity greedy and the
//! carbon-oblivious queue-length baseline.
//!
//! Each slot the drift-plus-penalty bound reduces to minimising
//!
//! ```text
//! Σ_{m,n} b[m][n]·d[m][n] + Σ_{m,n} c[m][n]·w[m][n]
//! b[m][n] = V·Cᵉ·pᵉ[m] + Qᶜ[m][n] − Qᵉ[m]
//! c[m][n] = V·Cᶜ[n]·pᶜ[m][n] − Qᶜ[m][n]
//! ```
//!
//! under the per-slot energy budgets. The greedy walks task types in order of
//! coefficient per unit of energy and only schedules units whose coefficient
//! is strictly negative.

use serde::{Deserialize, Serialize};

use crate::model::{Action, Arrivals, CarbonSnapshot, NetworkSpec, QueueState};

/// What to do when the walk reaches a type whose coefficient is not negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakMode {
    #[default]
    BreakOnFirstNonnegative,
    SkipAndContinue,
}

/// Budget deducted by the edge stage after dispatching type `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeDeduction {
    /// `dispatched · pᵉ[m]`, same as the cloud stage.
    #[default]
    Actual,
    /// `⌊P / pᵉ[m]⌋ · pᵉ[m]` regardless of how many tasks were sent.
    FullCapacity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    LowestIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyConfig {
    /// Drift-plus-penalty weight on emissions.
    pub v: f64,
    pub edge_break_mode: BreakMode,
    pub cloud_break_mode: BreakMode,
    pub edge_deduction: EdgeDeduction,
    pub tie_break: TieBreak,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            v: 0.05,
            edge_break_mode: BreakMode::default(),
            cloud_break_mode: BreakMode::default(),
            edge_deduction: EdgeDeduction::default(),
            tie_break: TieBreak::default(),
        }
    }
}

impl PolicyConfig {
    pub fn with_v(v: f64) -> Self {
        Self {
            v,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.v.is_finite() && self.v >= 0.0 {
            Ok(())
        } else {
            Err(format!("V must be finite and >= 0, got {}", self.v))
        }
    }
}

/// Per-unit contributions of dispatch (`b`) and work (`c`) to the bound.
#[derive(Debug, Clone, PartialEq)]
pub struct DppCoefficients {
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

pub fn dpp_coefficients(
    state: &QueueState,
    spec: &NetworkSpec,
    carbon: &CarbonSnapshot,
    config: &PolicyConfig,
) -> DppCoefficients {
    let v = config.v;
    let (m_count, n_count) = (spec.task_types(), spec.clouds());
    let mut b = vec![vec![0.0; n_count]; m_count];
    let mut c = vec![vec![0.0; n_count]; m_count];
    for m in 0..m_count {
        let qe = state.edge[m] as f64;
        let pe = spec.edge_send_energy()[m];
        for n in 0..n_count {
            let qc = state.cloud[m][n] as f64;
            let pc = spec.cloud_proc_energy()[m][n];
            b[m][n] = v * carbon.edge * pe + qc - qe;
            c[m][n] = v * carbon.cloud[n] * pc - qc;
        }
    }
    DppCoefficients { b, c }
}

pub fn dpp_objective(action: &Action, coeffs: &DppCoefficients) -> f64 {
    let dot = |x: &[Vec<u64>], k: &[Vec<f64>]| -> f64 {
        x.iter()
            .flatten()
            .zip(k.iter().flatten())
            .map(|(&u, &coef)| u as f64 * coef)
            .sum()
    };
    dot(&action.dispatch, &coeffs.b) + dot(&action.work, &coeffs.c)
}

/// Largest `k` with `k · unit ≤ budget`.
pub(crate) fn units_within(budget: f64, unit: f64) -> u64 {
    if budget.is_nan() || budget <= 0.0 {
        return 0;
    }
    let mut k = (budget / unit).floor();
    while k > 0.0 && k * unit > budget {
        k -= 1.0;
    }
    while (k + 1.0) * unit <= budget {
        k += 1.0;
    }
    k as u64
}

/// Lowest index of the minimum of `xs`.
pub(crate) fn argmin(xs: &[u64]) -> usize {
    xs.iter()
        .enumerate()
        .min_by_key(|&(i, &x)| (x, i))
        .map(|(i, _)| i)
        .expect("at least one cloud")
}

/// Drift-plus-penalty greedy.
///
/// Arrivals observed this slot join the edge queue only after the slot, so
/// they do not enter the decision; the argument is accepted so the call
/// mirrors what the scheduler observes.
pub fn carbon_intensity_policy(
    state: &QueueState,
    spec: &NetworkSpec,
    carbon: &CarbonSnapshot,
    _arrivals_observed: &Arrivals,
    config: &PolicyConfig,
) -> Action {
    let coeffs = dpp_coefficients(state, spec, carbon, config);
    let mut action = Action::zero(spec);
    let m_count = spec.task_types();

    // Edge: each type goes to its shortest cloud queue only.
    let pe = spec.edge_send_energy();
    let target: Vec<usize> = (0..m_count).map(|m| argmin(&state.cloud[m])).collect();
    let ratio: Vec<f64> = (0..m_count)
        .map(|m| (state.cloud[m][target[m]] as f64 - state.edge[m] as f64) / pe[m])
        .collect();
    let mut order: Vec<usize> = (0..m_count).collect();
    order.sort_by(|&a, &b| ratio[a].total_cmp(&ratio[b]));

    let mut budget = spec.edge_budget();
    for &m in &order {
        let fit = units_within(budget, pe[m]);
        if fit == 0 {
            continue;
        }
        if coeffs.b[m][target[m]] < 0.0 {
            let sent = state.edge[m].min(fit);
            action.dispatch[m][target[m]] = sent;
            let used = match config.edge_deduction {
                EdgeDeduction::Actual => sent,
                EdgeDeduction::FullCapacity => fit,
            };
            budget -= used as f64 * pe[m];
        } else if config.edge_break_mode == BreakMode::BreakOnFirstNonnegative {
            break;
        }
    }

    // Clouds: independent budgets.
    for n in 0..spec.clouds() {
        let pc: Vec<f64> = (0..m_count).map(|m| spec.cloud_proc_energy()[m][n]).collect();
        let ratio: Vec<f64> = (0..m_count)
            .map(|m| state.cloud[m][n] as f64 / pc[m])
            .collect();
        let mut order: Vec<usize> = (0..m_count).collect();
        order.sort_by(|&a, &b| ratio[b].total_cmp(&ratio[a]));

        let mut budget = spec.cloud_budget()[n];
        for &m in &order {
            let fit = units_within(budget, pc[m]);
            if fit == 0 {
                continue;
            }
            if coeffs.c[m][n] < 0.0 {
                let done = state.cloud[m][n].min(fit);
                action.work[m][n] = done;
                budget -= done as f64 * pc[m];
            } else if config.cloud_break_mode == BreakMode::BreakOnFirstNonnegative {
                break;
            }
        }
    }
    action
}

/// Longest-queue-first baseline. Ignores carbon intensity entirely.
pub fn queue_length_policy(state: &QueueState, spec: &NetworkSpec) -> Action {
    let mut action = Action::zero(spec);
    let m_count = spec.task_types();

    let pe = spec.edge_send_energy();
    let mut order: Vec<usize> = (0..m_count).collect();
    order.sort_by(|&a, &b| state.edge[b].cmp(&state.edge[a]));
    let mut budget = spec.edge_budget();
    for &m in &order {
        let fit = units_within(budget, pe[m]);
        let sent = state.edge[m].min(fit);
        if sent == 0 {
            continue;
        }
        action.dispatch[m][argmin(&state.cloud[m])] = sent;
        budget -= sent as f64 * pe[m];
    }

    for n in 0..spec.clouds() {
        let mut order: Vec<usize> = (0..m_count).collect();
        order.sort_by(|&a, &b| state.cloud[b][n].cmp(&state.cloud[a][n]));
        let mut budget = spec.cloud_budget()[n];
        for &m in &order {
            let pc = spec.cloud_proc_energy()[m][n];
            let done = state.cloud[m][n].min(units_within(budget, pc));
            action.work[m][n] = done;
            budget -= done as f64 * pc;
        }
    }
    action
}

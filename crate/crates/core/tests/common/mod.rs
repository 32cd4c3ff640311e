#![allow(dead_code)]

use carbonq::model::{is_feasible, Action, Arrivals, CarbonSnapshot, NetworkSpec, QueueState};
use proptest::prelude::*;

/// Energies on a 0.05 grid so the oracle accepts them.
fn energy() -> impl Strategy<Value = f64> {
    (1u32..=400).prop_map(|k| k as f64 * 0.05)
}

fn budget() -> impl Strategy<Value = f64> {
    (0u32..=20_000).prop_map(|k| k as f64 * 0.01)
}

pub fn spec_strategy(max_m: usize, max_n: usize) -> impl Strategy<Value = NetworkSpec> {
    (1..=max_m, 1..=max_n).prop_flat_map(|(m, n)| {
        (
            prop::collection::vec(energy(), m),
            prop::collection::vec(prop::collection::vec(energy(), n), m),
            budget(),
            prop::collection::vec(budget(), n),
        )
            .prop_map(|(pe, pc, be, bc)| NetworkSpec::new(pe, pc, be, bc).unwrap())
    })
}

pub fn state_strategy(spec: &NetworkSpec, max_q: u64) -> impl Strategy<Value = QueueState> {
    let (m, n) = (spec.task_types(), spec.clouds());
    (
        prop::collection::vec(0..=max_q, m),
        prop::collection::vec(prop::collection::vec(0..=max_q, n), m),
    )
        .prop_map(|(edge, cloud)| QueueState { t: 0, edge, cloud })
}

pub fn carbon_strategy(n: usize) -> impl Strategy<Value = CarbonSnapshot> {
    (0u32..=700, prop::collection::vec(0u32..=700, n))
        .prop_map(|(e, c)| CarbonSnapshot::new(e as f64, c.into_iter().map(f64::from).collect()).unwrap())
}

/// A spec with a state, an intensity snapshot and a V in [0, 1].
pub fn instance(
    max_m: usize,
    max_n: usize,
    max_q: u64,
) -> impl Strategy<Value = (NetworkSpec, QueueState, CarbonSnapshot, f64)> {
    spec_strategy(max_m, max_n).prop_flat_map(move |spec| {
        let n = spec.clouds();
        (
            state_strategy(&spec, max_q),
            carbon_strategy(n),
            (0u32..=100).prop_map(|k| k as f64 / 100.0),
            Just(spec),
        )
            .prop_map(|(s, c, v, spec)| (spec, s, c, v))
    })
}

/// Shrinks an arbitrary action until it fits both budgets.
pub fn make_feasible(mut action: Action, spec: &NetworkSpec) -> Action {
    while !is_feasible(&action, spec).unwrap() {
        for row in action.dispatch.iter_mut().chain(action.work.iter_mut()) {
            for x in row.iter_mut() {
                *x /= 2;
            }
        }
    }
    action
}

pub fn raw_action(spec: &NetworkSpec, max: u64) -> impl Strategy<Value = Action> {
    let (m, n) = (spec.task_types(), spec.clouds());
    (
        prop::collection::vec(prop::collection::vec(0..=max, n), m),
        prop::collection::vec(prop::collection::vec(0..=max, n), m),
    )
        .prop_map(|(dispatch, work)| Action { dispatch, work })
}

pub fn arrivals(m: usize, max: u64) -> impl Strategy<Value = Arrivals> {
    prop::collection::vec(0..=max, m).prop_map(|count| Arrivals { count })
}

/// Independent recomputation of the queue update in wide integers.
pub fn step_oracle(state: &QueueState, action: &Action, arrivals: &Arrivals) -> QueueState {
    let edge = state
        .edge
        .iter()
        .enumerate()
        .map(|(m, &q)| {
            let sent: i128 = action.dispatch[m].iter().map(|&d| d as i128).sum();
            ((q as i128 - sent).max(0) + arrivals.count[m] as i128) as u64
        })
        .collect();
    let cloud = state
        .cloud
        .iter()
        .enumerate()
        .map(|(m, row)| {
            row.iter()
                .enumerate()
                .map(|(n, &q)| {
                    ((q as i128 - action.work[m][n] as i128).max(0)
                        + action.dispatch[m][n] as i128) as u64
                })
                .collect()
        })
        .collect();
    QueueState {
        t: state.t + 1,
        edge,
        cloud,
    }
}

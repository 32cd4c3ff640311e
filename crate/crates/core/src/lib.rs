//! Carbon-aware task scheduling over an edge server and a set of clouds.
//!
//! Tasks arrive at the edge, are dispatched to clouds and processed there,
//! each step drawing energy from grids whose carbon intensity changes from
//! slot to slot. The crate provides the virtual queueing model
//! ([`model`]), a drift-plus-penalty scheduling policy and a carbon-oblivious
//! baseline ([`policy`]), an exact per-slot oracle ([`oracle`], built on
//! [`knapsack`]), input streams ([`workload`]), the simulation harness
//! ([`sim`]), and experiment files plus output writers ([`experiment`],
//! [`output`]).

pub mod experiment;
pub mod knapsack;
pub mod model;
pub mod oracle;
pub mod output;
pub mod policy;
pub mod sim;
pub mod workload;

pub use model::{Action, Arrivals, CarbonSnapshot, NetworkSpec, QueueState};
pub use oracle::OracleConfig;
pub use policy::PolicyConfig;
pub use sim::{run, PolicyKind, RunConfig, RunMetrics};

//! Sound model checking of explicit finite MDPs.

mod chain;
pub(crate) mod graph;
mod ivi;
mod sparse;

pub use chain::{evaluate_markov_chain, ChainValues};
pub(crate) use ivi::relative_gap;
pub use ivi::{
    check, check_with, epsilon_optimal_actions, reachable_under, CheckOptions, RowBounds,
    ValueResult, DEFAULT_PRECISION,
};
pub use sparse::{Row, SparseMdp};

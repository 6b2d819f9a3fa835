//! Abstraction refinement: grid abstractions of the belief MDP, bound
//! bookkeeping and the loop tying them together.

mod abstraction;
mod bounds;
mod heuristics;
mod policy;
mod refinement;

pub use abstraction::{
    build_discretized, is_prepared, AbstractionMdp, CutoffPolicy, StateStatus, CUTOFF_ACTION,
};
pub use bounds::{eq1_upper_bound, optimistic_vector, BoundSource, BoundsLedger, RecordedBounds};
pub use heuristics::{explore_gate, rewire_gate, HeuristicConfig, PRESET_NAMES};
pub use policy::{
    guess_lower_bound_policies, induced_chain, ObservationPolicy, PolicyGuess, ENUMERATION_LIMIT,
};
pub use refinement::{
    bootstrap, exploration_loop, refinement_loop, single_shot, threshold_verdict, Bootstrap,
    IterationLog, LoopBudget, LoopOptions, LoopOutcome, Status,
};

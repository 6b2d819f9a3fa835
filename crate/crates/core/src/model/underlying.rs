use super::{Pomdp, Specification};
use crate::check::{check_with, CheckOptions, SparseMdp, ValueResult, DEFAULT_PRECISION};
use crate::error::Result;
use crate::scalar::Scalar;

/// Optimal values of the fully observable MDP, bracketed at every state to
/// relative precision 1e-6. Unreachable-goal reward states come out as ∞.
pub fn underlying_mdp_values<T: Scalar>(
    pomdp: &Pomdp<T>,
    spec: &Specification<T>,
) -> Result<ValueResult> {
    let mdp = SparseMdp::from_pomdp(pomdp, spec);
    let options = CheckOptions {
        precision: DEFAULT_PRECISION,
        all_states: true,
        ..CheckOptions::default()
    };
    check_with(&mdp, spec.kind, spec.direction, &options)
}

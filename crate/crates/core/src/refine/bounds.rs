use std::collections::HashMap;

use serde::Serialize;

use crate::belief::{Belief, BeliefBound};
use crate::check::{relative_gap, ValueResult};
use crate::model::Direction;
use crate::scalar::Scalar;

/// `Σ_s b(s) · values[s]`: with fully observable optimal values this bounds
/// the belief value from the optimistic side.
pub fn eq1_upper_bound<T: Scalar>(b: &Belief<T>, mdp_values: &[f64]) -> f64 {
    b.expectation(mdp_values)
}

/// The underlying-MDP value vector on the optimistic side of `direction`.
pub fn optimistic_vector(result: &ValueResult) -> Vec<f64> {
    match result.direction {
        Direction::Max => result.upper.clone(),
        Direction::Min => result.lower.clone(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundSource {
    Bootstrap,
    Abstraction,
    Exploration,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecordedBounds {
    pub iteration: usize,
    pub lower: f64,
    pub upper: f64,
    pub lower_source: BoundSource,
    pub upper_source: BoundSource,
}

/// Lower and upper value bounds per belief plus the global result interval.
///
/// Base bounds are computed on demand from the fully observable values and
/// the guessed policies; abstraction and exploration results tighten them
/// per belief id.
#[derive(Clone, Debug)]
pub struct BoundsLedger {
    direction: Direction,
    optimistic: Vec<f64>,
    policies: BeliefBound,
    refined: HashMap<usize, (f64, f64)>,
    history: Vec<RecordedBounds>,
    best: (f64, f64),
}

impl BoundsLedger {
    /// `optimistic` holds fully observable values (upper side for max);
    /// `policy_values` holds state values of achievable policies.
    pub fn new(direction: Direction, optimistic: Vec<f64>, policy_values: Vec<Vec<f64>>) -> Self {
        let policies = BeliefBound {
            vectors: policy_values,
            take_max: direction == Direction::Max,
        };
        BoundsLedger {
            direction,
            optimistic,
            policies,
            refined: HashMap::new(),
            history: Vec::new(),
            best: (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn optimistic_values(&self) -> &[f64] {
        &self.optimistic
    }

    /// Candidate values whose belief-wise best is achievable.
    pub fn policy_bound(&self) -> &BeliefBound {
        &self.policies
    }

    fn base<T: Scalar>(&self, b: &Belief<T>) -> (f64, f64) {
        let eq1 = eq1_upper_bound(b, &self.optimistic);
        let policy = self.policies.value(b);
        match self.direction {
            Direction::Max => (policy.max(0.0), eq1),
            Direction::Min => (eq1, policy),
        }
    }

    /// `(L(b), U(b))`; `id` is the belief's id in the caller's store.
    pub fn bounds<T: Scalar>(&self, id: Option<usize>, b: &Belief<T>) -> (f64, f64) {
        let (mut lower, mut upper) = self.base(b);
        if let Some((l, u)) = id.and_then(|i| self.refined.get(&i)) {
            lower = lower.max(*l);
            upper = upper.min(*u);
        }
        (lower, upper.max(lower))
    }

    /// The bound an over-approximating abstraction may assume.
    pub fn optimistic<T: Scalar>(&self, id: Option<usize>, b: &Belief<T>) -> f64 {
        let (l, u) = self.bounds(id, b);
        match self.direction {
            Direction::Max => u,
            Direction::Min => l,
        }
    }

    pub fn refine(&mut self, id: usize, lower: f64, upper: f64) {
        let slot = self
            .refined
            .entry(id)
            .or_insert((f64::NEG_INFINITY, f64::INFINITY));
        slot.0 = slot.0.max(lower);
        slot.1 = slot.1.min(upper);
    }

    pub fn record(
        &mut self,
        iteration: usize,
        lower: (f64, BoundSource),
        upper: (f64, BoundSource),
    ) {
        self.best.0 = self.best.0.max(lower.0);
        self.best.1 = self.best.1.min(upper.0);
        self.history.push(RecordedBounds {
            iteration,
            lower: lower.0,
            upper: upper.0,
            lower_source: lower.1,
            upper_source: upper.1,
        });
    }

    /// Best-so-far `(L, U)` at the initial belief.
    pub fn result(&self) -> (f64, f64) {
        self.best
    }

    pub fn gap(&self) -> f64 {
        relative_gap(self.best.0, self.best.1)
    }

    pub fn history(&self) -> &[RecordedBounds] {
        &self.history
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn eq1_is_belief_weighted() {
        let values = vec![0.0, 11.0 / 15.0, 1.0];
        let b = Belief::new(
            0,
            [
                (1, Rational::from_ratio(3, 4)),
                (2, Rational::from_ratio(1, 4)),
            ],
        );
        assert!((eq1_upper_bound(&b, &values) - 0.8).abs() < 1e-15);
        assert_eq!(
            eq1_upper_bound(&Belief::<Rational>::dirac(0, 2), &values),
            1.0
        );
    }

    #[test]
    fn ledger_envelope() {
        let mut ledger = BoundsLedger::new(Direction::Max, vec![1.0, 0.5], vec![vec![0.2, 0.1]]);
        let b = Belief::<f64>::dirac(0, 0);
        assert_eq!(ledger.bounds(None, &b), (0.2, 1.0));
        ledger.refine(7, 0.3, 0.9);
        assert_eq!(ledger.bounds(Some(7), &b), (0.3, 0.9));
        ledger.record(
            1,
            (0.3, BoundSource::Exploration),
            (0.9, BoundSource::Abstraction),
        );
        ledger.record(
            2,
            (0.25, BoundSource::Exploration),
            (0.95, BoundSource::Abstraction),
        );
        assert_eq!(ledger.result(), (0.3, 0.9));
        assert_eq!(ledger.history().len(), 2);
    }
}

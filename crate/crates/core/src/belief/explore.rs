use std::collections::VecDeque;
use std::fmt::Write as _;
use std::time::Instant;

use super::{belief_reward, belief_successors, initial_belief, Belief, BeliefStore};
use crate::check::SparseMdp;
use crate::error::Result;
use crate::model::{Pomdp, Specification};
use crate::scalar::Scalar;

/// Exploration step `i`; allows `2^{i-1} · |S| · max_z |O⁻¹(z)|` beliefs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExplorationBudget {
    pub step: u32,
}

impl ExplorationBudget {
    pub fn new(step: u32) -> Self {
        assert!(step >= 1, "exploration steps start at 1");
        ExplorationBudget { step }
    }

    pub fn max_states<T: Scalar>(&self, pomdp: &Pomdp<T>) -> usize {
        let base = pomdp.num_states().saturating_mul(pomdp.max_class_size());
        let factor = 1usize.checked_shl(self.step - 1).unwrap_or(usize::MAX);
        base.saturating_mul(factor).max(1)
    }
}

/// Belief values of the form `best_σ Σ_s b(s) · v_σ(s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefBound {
    pub vectors: Vec<Vec<f64>>,
    /// Combine the candidates with max (lower bounds of maximising
    /// objectives) or min (upper bounds).
    pub take_max: bool,
}

impl BeliefBound {
    pub fn value<T: Scalar>(&self, b: &Belief<T>) -> f64 {
        let values = self.vectors.iter().map(|v| b.expectation(v));
        if self.take_max {
            values.fold(f64::NEG_INFINITY, f64::max)
        } else {
            values.fold(f64::INFINITY, f64::min)
        }
    }

    /// The value at a Dirac belief on `state`.
    pub fn at_state(&self, state: usize) -> f64 {
        let values = self.vectors.iter().map(|v| v[state]);
        if self.take_max {
            values.fold(f64::NEG_INFINITY, f64::max)
        } else {
            values.fold(f64::INFINITY, f64::min)
        }
    }
}

/// What an unexplored successor is worth.
#[derive(Clone, Copy, Debug)]
pub enum Cutoff<'a> {
    /// The smallest possible value (0).
    ToSink,
    /// The largest possible value (1, or ∞ for rewards).
    ToTarget,
    Bound(&'a BeliefBound),
}

#[derive(Clone, Debug)]
pub struct Exploration<T: Scalar> {
    pub mdp: SparseMdp<T>,
    pub store: BeliefStore<T>,
    /// MDP state of each stored belief.
    pub state_of: Vec<usize>,
    pub target_sink: Option<usize>,
    pub zero_sink: Option<usize>,
    /// Successor beliefs whose mass was cut off.
    pub frontier: Vec<Belief<T>>,
    /// True iff nothing was cut, so the values are exact.
    pub complete: bool,
    pub max_states: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum SinkKind {
    Target,
    Zero,
}

pub(crate) fn sink_kind<T: Scalar>(spec: &Specification<T>, b: &Belief<T>) -> Option<SinkKind> {
    if b.support().iter().all(|&s| spec.is_target(s)) {
        Some(SinkKind::Target)
    } else if b.support().iter().all(|&s| spec.is_avoid(s)) {
        Some(SinkKind::Zero)
    } else {
        None
    }
}

/// Lazily created sink states of a belief-level MDP.
#[derive(Clone, Debug, Default)]
pub(crate) struct Sinks {
    pub target: Option<usize>,
    pub zero: Option<usize>,
}

impl Sinks {
    pub fn get<T: Scalar>(&mut self, mdp: &mut SparseMdp<T>, kind: SinkKind) -> usize {
        let slot = match kind {
            SinkKind::Target => &mut self.target,
            SinkKind::Zero => &mut self.zero,
        };
        if let Some(s) = *slot {
            return s;
        }
        let s = mdp.add_state();
        mdp.add_row(s, 0, [(s, T::one())], T::zero())
            .expect("self-loop is stochastic");
        match kind {
            SinkKind::Target => mdp.set_target(s, true),
            SinkKind::Zero => mdp.set_avoid(s, true),
        }
        *slot = Some(s);
        s
    }
}

/// Splits cut-off mass `p` of a successor valued `u` into sink edges plus
/// row reward.
pub(crate) fn cut_mass<T: Scalar>(
    mdp: &mut SparseMdp<T>,
    sinks: &mut Sinks,
    probability_objective: bool,
    p: T,
    u: f64,
    entries: &mut Vec<(usize, T)>,
    reward: &mut T,
) {
    if probability_objective {
        let u = T::from_f64(u.clamp(0.0, 1.0));
        let up = p.clone() * u.clone();
        let down = p * (T::one() - u);
        if !up.is_zero() {
            entries.push((sinks.get(mdp, SinkKind::Target), up));
        }
        if !down.is_zero() {
            entries.push((sinks.get(mdp, SinkKind::Zero), down));
        }
    } else if u.is_finite() {
        *reward = reward.clone() + p.clone() * T::from_f64(u.max(0.0));
        entries.push((sinks.get(mdp, SinkKind::Target), p));
    } else {
        entries.push((sinks.get(mdp, SinkKind::Zero), p));
    }
}

impl Cutoff<'_> {
    pub(crate) fn value<T: Scalar>(&self, b: &Belief<T>, probability: bool) -> f64 {
        match self {
            Cutoff::ToSink => 0.0,
            Cutoff::ToTarget if probability => 1.0,
            Cutoff::ToTarget => f64::INFINITY,
            Cutoff::Bound(bound) => bound.value(b),
        }
    }
}

/// Breadth-first exploration of the belief MDP from the initial belief,
/// without discretisation. At most `budget.max_states` beliefs are
/// discovered; mass towards further beliefs is cut off.
pub fn explore_belief_mdp<T: Scalar>(
    pomdp: &Pomdp<T>,
    spec: &Specification<T>,
    budget: ExplorationBudget,
    cutoff: Cutoff<'_>,
) -> Result<Exploration<T>> {
    let e = explore_until(pomdp, spec, budget, cutoff, None)?;
    Ok(e.expect("no deadline"))
}

/// As [`explore_belief_mdp`]; gives up with `None` once `deadline` passes.
pub(crate) fn explore_until<T: Scalar>(
    pomdp: &Pomdp<T>,
    spec: &Specification<T>,
    budget: ExplorationBudget,
    cutoff: Cutoff<'_>,
    deadline: Option<Instant>,
) -> Result<Option<Exploration<T>>> {
    let probability = spec.kind.is_probability();
    let max_states = budget.max_states(pomdp);
    let mut mdp = SparseMdp::new();
    let mut store = BeliefStore::new();
    let mut state_of = Vec::new();
    let mut sinks = Sinks::default();
    let mut frontier = Vec::new();
    let mut queue = VecDeque::new();

    let init = initial_belief(pomdp);
    match sink_kind(spec, &init) {
        Some(kind) => {
            let s = sinks.get(&mut mdp, kind);
            mdp.set_initial(s);
        }
        None => {
            let (id, _) = store.intern(init);
            let s = mdp.add_state();
            state_of.push(s);
            mdp.set_initial(s);
            queue.push_back(id);
        }
    }

    while let Some(id) = queue.pop_front() {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Ok(None);
        }
        let b = store.get(id).clone();
        let from = state_of[id];
        for action in pomdp.observation_actions(b.obs()) {
            let mut entries = Vec::new();
            let mut reward = if probability {
                T::zero()
            } else {
                belief_reward(spec, &b, action)
            };
            for (next, p) in belief_successors(pomdp, &b, action)? {
                if let Some(kind) = sink_kind(spec, &next) {
                    entries.push((sinks.get(&mut mdp, kind), p));
                    continue;
                }
                if let Some(known) = store.lookup(&next) {
                    entries.push((state_of[known], p));
                    continue;
                }
                if store.len() < max_states {
                    let (nid, _) = store.intern(next);
                    let s = mdp.add_state();
                    state_of.push(s);
                    queue.push_back(nid);
                    entries.push((s, p));
                    continue;
                }
                let u = cutoff.value(&next, probability);
                cut_mass(
                    &mut mdp,
                    &mut sinks,
                    probability,
                    p,
                    u,
                    &mut entries,
                    &mut reward,
                );
                frontier.push(next);
            }
            mdp.add_row(from, action, entries, reward)?;
        }
    }

    Ok(Some(Exploration {
        complete: frontier.is_empty(),
        mdp,
        store,
        state_of,
        target_sink: sinks.target,
        zero_sink: sinks.zero,
        frontier,
        max_states,
    }))
}

/// One line per transition: `from action to prob`.
pub fn export_graph<T: Scalar>(mdp: &SparseMdp<T>) -> String {
    let mut out = String::new();
    for s in 0..mdp.num_states() {
        for row in mdp.rows(s) {
            for (t, p) in &row.entries {
                let _ = writeln!(out, "{s} {} {t} {}", row.action, p.render());
            }
        }
    }
    out
}

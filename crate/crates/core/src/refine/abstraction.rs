use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use super::bounds::BoundsLedger;
use super::heuristics::{explore_gate, rewire_gate};
use crate::belief::{
    belief_reward, belief_successors, cut_mass, initial_belief, sink_kind, Belief, BeliefStore,
    SinkKind, Sinks,
};
use crate::check::SparseMdp;
use crate::error::{Error, Result};
use crate::model::{Pomdp, Specification};
use crate::scalar::Scalar;
use crate::triangulation::Foundation;

/// Action label of the single row of a strictly cut-off state.
pub const CUTOFF_ACTION: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateStatus {
    Explored,
    CutOff,
    Sink,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Wire {
    Belief(usize),
    Sink(SinkKind),
}

/// A triangulated row of an explored belief, kept across iterations.
#[derive(Clone, Debug)]
pub(crate) struct WiredRow<T> {
    entries: Vec<(Wire, T)>,
    reward: T,
    /// Foundation version of every successor observation when wired.
    versions: Vec<(usize, u32)>,
    /// Successor beliefs before triangulation.
    successors: Vec<Belief<T>>,
}

/// How newly discovered beliefs are cut off in a one-shot build.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CutoffPolicy {
    Never,
    /// Cut beliefs whose relative bound gap is at most this.
    GapThreshold(f64),
    /// Cut everything once this many beliefs were explored.
    StepBudget(usize),
    Combined {
        gap: f64,
        steps: usize,
    },
}

/// A finite MDP over grid beliefs over-approximating the belief MDP.
#[derive(Clone, Debug)]
pub struct AbstractionMdp<T: Scalar> {
    pub mdp: SparseMdp<T>,
    pub store: BeliefStore<T>,
    state_of: HashMap<usize, usize>,
    belief_of: Vec<Option<usize>>,
    status: Vec<StateStatus>,
    pub target_sink: Option<usize>,
    pub zero_sink: Option<usize>,
    wired: HashMap<(usize, usize), WiredRow<T>>,
    /// Beliefs explored for the first time in this build.
    pub explored: usize,
    /// Previously explored beliefs with at least one recomputed row.
    pub rewired: usize,
    pub cut_off: usize,
}

impl<T: Scalar> AbstractionMdp<T> {
    pub fn num_states(&self) -> usize {
        self.mdp.num_states()
    }

    pub fn state_of_belief(&self, id: usize) -> Option<usize> {
        self.state_of.get(&id).copied()
    }

    pub fn belief_id(&self, state: usize) -> Option<usize> {
        self.belief_of[state]
    }

    pub fn belief(&self, state: usize) -> Option<&Belief<T>> {
        self.belief_of[state].map(|id| self.store.get(id))
    }

    pub fn status(&self, state: usize) -> StateStatus {
        self.status[state]
    }

    pub fn lookup_state(&self, b: &Belief<T>) -> Option<usize> {
        self.store.lookup(b).and_then(|id| self.state_of_belief(id))
    }

    pub fn count(&self, status: StateStatus) -> usize {
        self.status.iter().filter(|&&s| s == status).count()
    }

    fn was_explored(&self, id: usize) -> bool {
        self.state_of_belief(id)
            .is_some_and(|s| self.status[s] == StateStatus::Explored)
    }

    /// Successor beliefs of `(b, action)` before triangulation, if wired.
    pub fn successors(&self, id: usize, action: usize) -> Option<&[Belief<T>]> {
        self.wired
            .get(&(id, action))
            .map(|w| w.successors.as_slice())
    }

    /// Text dump: one `state` line per state, then `from action to prob`.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for s in 0..self.num_states() {
            let label = match self.belief(s) {
                Some(b) => b.to_string(),
                None if Some(s) == self.target_sink => "target".into(),
                None => "zero".into(),
            };
            let status = match self.status[s] {
                StateStatus::Explored => "explored",
                StateStatus::CutOff => "cutoff",
                StateStatus::Sink => "sink",
            };
            let _ = writeln!(out, "state {s} {status} {label}");
        }
        for s in 0..self.num_states() {
            for row in self.mdp.rows(s) {
                let action = if row.action == CUTOFF_ACTION {
                    "cut".to_string()
                } else {
                    row.action.to_string()
                };
                for (t, p) in &row.entries {
                    let _ = writeln!(out, "{s} {action} {t} {}", p.render());
                }
            }
        }
        out
    }
}

/// Inputs to one abstraction build.
pub(crate) struct BuildParams<'a> {
    pub rho_gap: f64,
    pub rho_step: f64,
    pub never_cut: bool,
    /// Belief ids reachable under near-optimal choices last iteration.
    pub prev_reach: Option<&'a HashSet<usize>>,
    /// Near-optimal actions per belief id from last iteration.
    pub prev_actions: Option<&'a HashMap<usize, Vec<usize>>>,
    /// Cut-off beliefs get a single row to the sinks instead of keeping
    /// edges to already discovered vertices.
    pub strict: bool,
    pub deadline: Option<Instant>,
}

pub(crate) enum BuildOutcome<T: Scalar> {
    Done(Box<AbstractionMdp<T>>),
    TimedOut(BeliefStore<T>),
}

struct Builder<'a, T: Scalar> {
    pomdp: &'a Pomdp<T>,
    spec: &'a Specification<T>,
    foundation: &'a Foundation<T>,
    ledger: &'a BoundsLedger,
    probability: bool,
    mdp: SparseMdp<T>,
    store: BeliefStore<T>,
    state_of: HashMap<usize, usize>,
    status: HashMap<usize, StateStatus>,
    sinks: Sinks,
    queue: VecDeque<(usize, usize)>,
}

impl<T: Scalar> Builder<'_, T> {
    fn state_for(&mut self, id: usize) -> usize {
        if let Some(&s) = self.state_of.get(&id) {
            return s;
        }
        let s = self.mdp.add_state();
        self.state_of.insert(id, s);
        self.queue.push_back((s, id));
        s
    }

    fn base_reward(&self, b: &Belief<T>, action: usize) -> T {
        if self.probability {
            T::zero()
        } else {
            belief_reward(self.spec, b, action)
        }
    }

    fn wire(&mut self, b: &Belief<T>, action: usize) -> Result<WiredRow<T>> {
        let mut entries = Vec::new();
        let mut versions = Vec::new();
        let mut successors = Vec::new();
        for (next, p) in belief_successors(self.pomdp, b, action)? {
            if let Some(kind) = sink_kind(self.spec, &next) {
                entries.push((Wire::Sink(kind), p));
                continue;
            }
            versions.push((next.obs(), self.foundation.version(next.obs())));
            for (vertex, mu) in self.foundation.neighbourhood(&next).iter() {
                let (vid, _) = self.store.intern(vertex.clone());
                entries.push((Wire::Belief(vid), p.clone() * mu.clone()));
            }
            successors.push(next);
        }
        Ok(WiredRow {
            entries,
            reward: self.base_reward(b, action),
            versions,
            successors,
        })
    }

    fn materialize(&mut self, s: usize, action: usize, row: &WiredRow<T>) -> Result<()> {
        let mut entries = Vec::with_capacity(row.entries.len());
        for (wire, p) in &row.entries {
            let t = match *wire {
                Wire::Belief(id) => self.state_for(id),
                Wire::Sink(kind) => self.sinks.get(&mut self.mdp, kind),
            };
            entries.push((t, p.clone()));
        }
        self.mdp.add_row(s, action, entries, row.reward.clone())
    }

    /// Rows of a belief that is not explored: mass towards undiscovered
    /// vertices goes to the sinks according to the optimistic bound.
    fn cut(&mut self, s: usize, id: usize, b: &Belief<T>, strict: bool) -> Result<()> {
        if strict {
            let u = self.ledger.optimistic(Some(id), b);
            let mut entries = Vec::new();
            let mut reward = T::zero();
            cut_mass(
                &mut self.mdp,
                &mut self.sinks,
                self.probability,
                T::one(),
                u,
                &mut entries,
                &mut reward,
            );
            return self.mdp.add_row(s, CUTOFF_ACTION, entries, reward);
        }
        for action in self.pomdp.observation_actions(b.obs()) {
            let mut entries = Vec::new();
            let mut reward = self.base_reward(b, action);
            for (next, p) in belief_successors(self.pomdp, b, action)? {
                if let Some(kind) = sink_kind(self.spec, &next) {
                    entries.push((self.sinks.get(&mut self.mdp, kind), p));
                    continue;
                }
                for (vertex, mu) in self.foundation.neighbourhood(&next).iter() {
                    let mass = p.clone() * mu.clone();
                    let known = self.store.lookup(vertex);
                    match known.and_then(|vid| self.state_of.get(&vid)) {
                        Some(&t) => entries.push((t, mass)),
                        None => {
                            let u = self.ledger.optimistic(known, vertex);
                            cut_mass(
                                &mut self.mdp,
                                &mut self.sinks,
                                self.probability,
                                mass,
                                u,
                                &mut entries,
                                &mut reward,
                            );
                        }
                    }
                }
            }
            self.mdp.add_row(s, action, entries, reward)?;
        }
        Ok(())
    }
}

/// Builds the abstraction breadth-first from the initial belief, reusing
/// the rows of `previous` where the foundation around them is unchanged.
/// Gives the store back once the deadline passes.
pub(crate) fn build<T: Scalar>(
    pomdp: &Pomdp<T>,
    spec: &Specification<T>,
    foundation: &Foundation<T>,
    ledger: &BoundsLedger,
    store: BeliefStore<T>,
    previous: Option<&AbstractionMdp<T>>,
    params: &BuildParams<'_>,
) -> Result<BuildOutcome<T>> {
    let mut b = Builder {
        pomdp,
        spec,
        foundation,
        ledger,
        probability: spec.kind.is_probability(),
        mdp: SparseMdp::new(),
        store,
        state_of: HashMap::new(),
        status: HashMap::new(),
        sinks: Sinks::default(),
        queue: VecDeque::new(),
    };
    let init = initial_belief(pomdp);
    match sink_kind(spec, &init) {
        Some(kind) => {
            let s = b.sinks.get(&mut b.mdp, kind);
            b.mdp.set_initial(s);
        }
        None => {
            let (id, _) = b.store.intern(init);
            let s = b.state_for(id);
            b.mdp.set_initial(s);
        }
    }

    let mut wired = HashMap::new();
    let (mut processed, mut explored, mut rewired, mut cut_off) = (0usize, 0, 0, 0);
    while let Some((s, id)) = b.queue.pop_front() {
        if params.deadline.is_some_and(|d| Instant::now() >= d) {
            return Ok(BuildOutcome::TimedOut(b.store));
        }
        let belief = b.store.get(id).clone();
        let (lower, upper) = ledger.bounds(Some(id), &belief);
        // Beliefs the previous abstraction never saw count as reachable.
        let known = previous.is_some_and(|p| p.state_of_belief(id).is_some());
        let reachable = !known || params.prev_reach.is_none_or(|r| r.contains(&id));
        let criteria = explore_gate(
            lower,
            upper,
            processed,
            reachable,
            params.rho_gap,
            params.rho_step,
        );
        let old = previous.filter(|p| p.was_explored(id));
        if !(params.never_cut || old.is_some() || criteria) {
            b.cut(s, id, &belief, params.strict)?;
            b.status.insert(s, StateStatus::CutOff);
            cut_off += 1;
            continue;
        }
        b.status.insert(s, StateStatus::Explored);
        if old.is_none() {
            processed += 1;
            explored += 1;
        }
        let optimal = params
            .prev_actions
            .and_then(|m| m.get(&id))
            .map(Vec::as_slice);
        let mut any_rewired = false;
        for action in pomdp.observation_actions(belief.obs()) {
            let kept = old.and_then(|p| p.wired.get(&(id, action)));
            let row = match kept {
                Some(w) if !rewire_gate(criteria, action, optimal, &w.versions, foundation) => {
                    w.clone()
                }
                _ => {
                    any_rewired |= kept.is_some();
                    b.wire(&belief, action)?
                }
            };
            b.materialize(s, action, &row)?;
            wired.insert((id, action), row);
        }
        if any_rewired {
            processed += 1;
            rewired += 1;
        }
    }

    let n = b.mdp.num_states();
    let mut belief_of = vec![None; n];
    for (&id, &s) in &b.state_of {
        belief_of[s] = Some(id);
    }
    let status = (0..n)
        .map(|s| b.status.get(&s).copied().unwrap_or(StateStatus::Sink))
        .collect();
    Ok(BuildOutcome::Done(Box::new(AbstractionMdp {
        mdp: b.mdp,
        store: b.store,
        state_of: b.state_of,
        belief_of,
        status,
        target_sink: b.sinks.target,
        zero_sink: b.sinks.zero,
        wired,
        explored,
        rewired,
        cut_off,
    })))
}

/// Whether target and avoid states are absorbing and observed apart from
/// all other states, as the abstraction requires.
pub fn is_prepared<T: Scalar>(pomdp: &Pomdp<T>, spec: &Specification<T>) -> bool {
    let mdp = pomdp.mdp();
    let special = |s: usize| spec.is_target(s) || spec.is_avoid(s);
    let absorbing = (0..mdp.num_states()).filter(|&s| special(s)).all(|s| {
        mdp.choices(s)
            .iter()
            .all(|c| c.distribution.iter().all(|(t, _)| *t == s))
    });
    let separated = (0..pomdp.num_observations()).all(|z| {
        let class = pomdp.class(z);
        let all = |f: &dyn Fn(usize) -> bool| class.iter().all(|&s| f(s));
        all(&|s| spec.is_target(s)) || all(&|s| spec.is_avoid(s)) || all(&|s| !special(s))
    });
    absorbing && separated
}

/// One-shot discretised belief MDP over `foundation`. Cut-off beliefs use
/// the optimistic side of `ledger`. The model must satisfy [`is_prepared`].
pub fn build_discretized<T: Scalar>(
    pomdp: &Pomdp<T>,
    spec: &Specification<T>,
    foundation: &Foundation<T>,
    cutoff: CutoffPolicy,
    ledger: &BoundsLedger,
) -> Result<AbstractionMdp<T>> {
    if !is_prepared(pomdp, spec) {
        return Err(Error::Config(
            "target and avoid states must be absorbing and observed separately".into(),
        ));
    }
    let (never_cut, rho_gap, rho_step) = match cutoff {
        CutoffPolicy::Never => (true, 0.0, f64::INFINITY),
        CutoffPolicy::GapThreshold(gap) => (false, gap, f64::INFINITY),
        CutoffPolicy::StepBudget(steps) => (false, -1.0, steps as f64),
        CutoffPolicy::Combined { gap, steps } => (false, gap, steps as f64),
    };
    let params = BuildParams {
        rho_gap,
        rho_step,
        never_cut,
        prev_reach: None,
        prev_actions: None,
        strict: false,
        deadline: None,
    };
    match build(
        pomdp,
        spec,
        foundation,
        ledger,
        BeliefStore::new(),
        None,
        &params,
    )? {
        BuildOutcome::Done(abstraction) => Ok(*abstraction),
        BuildOutcome::TimedOut(_) => unreachable!("no deadline"),
    }
}

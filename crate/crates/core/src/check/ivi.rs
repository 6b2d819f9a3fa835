//! Interval value iteration with sound two-sided bounds.

use std::collections::{BTreeSet, VecDeque};
use std::time::Instant;

use super::graph::{self, Predecessors};
use super::sparse::{FloatMdp, SparseMdp};
use crate::error::{Error, Result};
use crate::model::{Direction, ObjectiveKind};
use crate::scalar::Scalar;

/// Default relative precision.
pub const DEFAULT_PRECISION: f64 = 1e-6;

/// Lifts optimistic upper guesses off lower bounds that are still zero.
const GUESS_SLACK: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct CheckOptions {
    /// Relative precision ε.
    pub precision: f64,
    pub max_sweeps: usize,
    /// Require the gap at every state, not only at the initial one.
    pub all_states: bool,
    pub deadline: Option<Instant>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            precision: DEFAULT_PRECISION,
            max_sweeps: 1_000_000,
            all_states: false,
            deadline: None,
        }
    }
}

/// Bounds on the value of taking one row's action.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RowBounds {
    pub action: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug)]
pub struct ValueResult {
    pub kind: ObjectiveKind,
    pub direction: Direction,
    pub initial: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Per state, bounds on each enabled action's value.
    pub q: Vec<Vec<RowBounds>>,
    pub iterations: usize,
    /// Relative gap achieved at the initial state.
    pub gap: f64,
    pub converged: bool,
}

impl ValueResult {
    pub fn initial_bounds(&self) -> (f64, f64) {
        (self.lower[self.initial], self.upper[self.initial])
    }
}

pub(crate) fn gap_met(lower: f64, upper: f64, precision: f64) -> bool {
    if upper == f64::INFINITY {
        return lower == f64::INFINITY;
    }
    upper - lower <= precision * upper.abs()
}

pub(crate) fn relative_gap(lower: f64, upper: f64) -> f64 {
    if upper == lower {
        0.0
    } else if upper == f64::INFINITY || upper == 0.0 {
        f64::INFINITY
    } else {
        (upper - lower) / upper.abs()
    }
}

/// Model checks `mdp` at relative precision `precision`.
pub fn check<T: Scalar>(
    mdp: &SparseMdp<T>,
    kind: ObjectiveKind,
    direction: Direction,
    precision: f64,
) -> Result<ValueResult> {
    let options = CheckOptions {
        precision,
        ..CheckOptions::default()
    };
    check_with(mdp, kind, direction, &options)
}

pub fn check_with<T: Scalar>(
    mdp: &SparseMdp<T>,
    kind: ObjectiveKind,
    direction: Direction,
    options: &CheckOptions,
) -> Result<ValueResult> {
    let m = mdp.to_float();
    for s in 0..m.num_states() {
        if m.rows(s).is_empty() && !m.target[s] && !m.avoid[s] {
            return Err(Error::MalformedMatrix(format!("state {s} has no rows")));
        }
    }
    Ok(Solver::new(&m, kind, direction, options).run())
}

struct Solver<'a> {
    m: &'a FloatMdp,
    kind: ObjectiveKind,
    direction: Direction,
    options: &'a CheckOptions,
    unknown: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    components: Vec<graph::EndComponent>,
}

impl<'a> Solver<'a> {
    fn new(
        m: &'a FloatMdp,
        kind: ObjectiveKind,
        direction: Direction,
        options: &'a CheckOptions,
    ) -> Self {
        let n = m.num_states();
        let pre = Predecessors::new(m);
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut is_unknown = vec![false; n];
        let probability = kind.is_probability();
        if probability {
            let zero = match direction {
                Direction::Max => graph::prob0a(m, &pre),
                Direction::Min => graph::prob0e(m, &pre),
            };
            for s in 0..n {
                if m.target[s] {
                    lower[s] = 1.0;
                    upper[s] = 1.0;
                } else if !(m.avoid[s] || zero[s]) {
                    upper[s] = 1.0;
                    is_unknown[s] = true;
                }
            }
        } else {
            let finite = match direction {
                Direction::Max => graph::prob1a(m, &pre),
                Direction::Min => graph::prob1e(m, &pre),
            };
            for s in 0..n {
                if m.target[s] {
                    continue;
                }
                if finite[s] {
                    is_unknown[s] = true;
                } else {
                    lower[s] = f64::INFINITY;
                    upper[s] = f64::INFINITY;
                }
            }
            let ceiling = reward_ceiling(m, &is_unknown);
            for s in 0..n {
                if is_unknown[s] {
                    upper[s] = ceiling;
                }
            }
        }
        let needs_components = matches!(
            (probability, direction),
            (true, Direction::Max) | (false, Direction::Min)
        );
        let components = if needs_components {
            graph::maximal_end_components(m, &is_unknown)
        } else {
            Vec::new()
        };
        Solver {
            m,
            kind,
            direction,
            options,
            unknown: (0..n).filter(|&s| is_unknown[s]).collect(),
            lower,
            upper,
            components,
        }
    }

    fn better(&self, a: f64, b: f64) -> f64 {
        match self.direction {
            Direction::Max => a.max(b),
            Direction::Min => a.min(b),
        }
    }

    fn worst(&self) -> f64 {
        match self.direction {
            Direction::Max => f64::NEG_INFINITY,
            Direction::Min => f64::INFINITY,
        }
    }

    fn row_value(&self, row: usize, values: &[f64]) -> f64 {
        let base = if self.kind.is_probability() {
            0.0
        } else {
            self.m.reward[row]
        };
        base + self.m.dot(row, values)
    }

    fn done(&self) -> bool {
        let eps = self.options.precision;
        if self.options.all_states {
            self.unknown
                .iter()
                .all(|&s| gap_met(self.lower[s], self.upper[s], eps))
        } else {
            let s = self.m.initial;
            gap_met(self.lower[s], self.upper[s], eps)
        }
    }

    fn sweep(&mut self) {
        for i in 0..self.unknown.len() {
            let s = self.unknown[i];
            let mut lo = self.worst();
            let mut up = self.worst();
            for r in self.m.rows(s) {
                lo = self.better(lo, self.row_value(r, &self.lower));
                up = self.better(up, self.row_value(r, &self.upper));
            }
            self.lower[s] = self.lower[s].max(lo);
            self.upper[s] = self.upper[s].min(up);
        }
    }

    /// Collapses end components onto their best exit: upper bounds for
    /// maximal probabilities, lower bounds for minimal rewards.
    fn treat_components(&mut self) {
        let probability = self.kind.is_probability();
        for c in 0..self.components.len() {
            let component = &self.components[c];
            if probability {
                let best = component
                    .exits
                    .iter()
                    .map(|&r| self.row_value(r, &self.upper))
                    .fold(0.0, f64::max);
                for &s in &component.states {
                    self.upper[s] = self.upper[s].min(best);
                }
            } else {
                let best = component
                    .exits
                    .iter()
                    .map(|&r| self.row_value(r, &self.lower))
                    .fold(f64::INFINITY, f64::min);
                for &s in &component.states {
                    self.lower[s] = self.lower[s].max(best);
                }
            }
        }
    }

    /// Tries an upper bound just above the lower one; accepted if it is
    /// inductive (and, for minimal rewards, its greedy policy is proper).
    fn try_optimistic_upper(&mut self) {
        let eps = self.options.precision;
        let mut candidate = self.upper.clone();
        for &s in &self.unknown {
            let guess = self.lower[s] * (1.0 + eps / 2.0) + GUESS_SLACK;
            candidate[s] = guess.min(self.upper[s]);
        }
        let mut greedy = vec![usize::MAX; self.m.num_states()];
        for &s in &self.unknown {
            let mut best = self.worst();
            let mut best_row = usize::MAX;
            for r in self.m.rows(s) {
                let q = self.row_value(r, &candidate);
                if best_row == usize::MAX || self.better(q, best) != best {
                    best = q;
                    best_row = r;
                }
            }
            if best > candidate[s] {
                return;
            }
            greedy[s] = best_row;
        }
        if !self.kind.is_probability()
            && self.direction == Direction::Min
            && !self.greedy_is_proper(&greedy)
        {
            return;
        }
        for &s in &self.unknown {
            self.upper[s] = self.upper[s].min(candidate[s]);
        }
    }

    fn greedy_is_proper(&self, greedy: &[usize]) -> bool {
        let n = self.m.num_states();
        let mut into: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &s in &self.unknown {
            for &c in self.m.successors(greedy[s]) {
                into[c].push(s);
            }
        }
        let mut reach = self.m.target.clone();
        let mut queue: VecDeque<usize> = (0..n).filter(|&s| reach[s]).collect();
        while let Some(x) = queue.pop_front() {
            for &s in &into[x] {
                if !reach[s] {
                    reach[s] = true;
                    queue.push_back(s);
                }
            }
        }
        self.unknown.iter().all(|&s| reach[s])
    }

    fn run(mut self) -> ValueResult {
        let mut iterations = 0;
        while !self.done() && iterations < self.options.max_sweeps {
            if let Some(deadline) = self.options.deadline {
                if iterations % 64 == 0 && Instant::now() >= deadline {
                    break;
                }
            }
            self.sweep();
            if !self.components.is_empty() {
                self.treat_components();
            }
            iterations += 1;
            if iterations % 8 == 0 {
                self.try_optimistic_upper();
            }
        }
        let converged = self.done();
        let q = (0..self.m.num_states())
            .map(|s| {
                self.m
                    .rows(s)
                    .map(|r| RowBounds {
                        action: self.m.action[r],
                        lower: self.row_value(r, &self.lower),
                        upper: self.row_value(r, &self.upper),
                    })
                    .collect()
            })
            .collect();
        let s = self.m.initial;
        ValueResult {
            kind: self.kind,
            direction: self.direction,
            initial: s,
            gap: relative_gap(self.lower[s], self.upper[s]),
            lower: self.lower,
            upper: self.upper,
            q,
            iterations,
            converged,
        }
    }
}

/// `|S| · max r / p_min^{|S|}` over the undecided part, or ∞ on overflow.
fn reward_ceiling(m: &FloatMdp, unknown: &[bool]) -> f64 {
    let count = unknown.iter().filter(|&&u| u).count();
    let mut p_min: f64 = 1.0;
    let mut r_max: f64 = 0.0;
    for s in (0..m.num_states()).filter(|&s| unknown[s]) {
        for r in m.rows(s) {
            r_max = r_max.max(m.reward[r]);
            for (_, p) in m.entries(r) {
                p_min = p_min.min(p);
            }
        }
    }
    let ceiling = count as f64 * r_max / p_min.powi(count.min(i32::MAX as usize) as i32);
    if ceiling.is_finite() {
        ceiling
    } else {
        f64::INFINITY
    }
}

/// Per state, the actions whose value may be within `rho` of optimal.
///
/// Uses the optimistic bound side so the returned set contains every truly
/// `rho`-optimal action. Action ids ascend.
pub fn epsilon_optimal_actions(result: &ValueResult, rho: f64) -> Vec<Vec<usize>> {
    result
        .q
        .iter()
        .enumerate()
        .map(|(s, rows)| {
            let mut actions: Vec<usize> = rows
                .iter()
                .filter(|q| match result.direction {
                    Direction::Max => q.upper + rho >= result.lower[s],
                    Direction::Min => q.lower - rho <= result.upper[s],
                })
                .map(|q| q.action)
                .collect();
            actions.sort_unstable();
            actions
        })
        .collect()
}

/// States reachable from the initial state using only the given actions.
pub fn reachable_under<T: Scalar>(
    mdp: &SparseMdp<T>,
    action_sets: &[Vec<usize>],
) -> BTreeSet<usize> {
    let mut seen = BTreeSet::new();
    if mdp.num_states() == 0 {
        return seen;
    }
    let mut queue = VecDeque::from([mdp.initial()]);
    seen.insert(mdp.initial());
    while let Some(s) = queue.pop_front() {
        let allowed = action_sets.get(s).map(Vec::as_slice).unwrap_or(&[]);
        for row in mdp.rows(s) {
            if !allowed.contains(&row.action) {
                continue;
            }
            for &(c, _) in &row.entries {
                if seen.insert(c) {
                    queue.push_back(c);
                }
            }
        }
    }
    seen
}

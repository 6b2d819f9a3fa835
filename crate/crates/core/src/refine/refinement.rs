use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::abstraction::{build, AbstractionMdp, BuildOutcome, BuildParams, StateStatus};
use super::bounds::{optimistic_vector, BoundSource, BoundsLedger};
use super::heuristics::HeuristicConfig;
use super::policy::{guess_lower_bound_policies, PolicyGuess};
use crate::belief::{
    explore_until, sink_kind, Belief, BeliefBound, BeliefStore, Cutoff, ExplorationBudget,
};
use crate::check::{
    check_with, epsilon_optimal_actions, reachable_under, CheckOptions, ValueResult,
};
use crate::error::Result;
use crate::model::{
    prepare_objective, underlying_mdp_values, Comparison, Direction, Pomdp, Specification,
};
use crate::scalar::Scalar;
use crate::triangulation::{extend_foundation, score_observation, Foundation};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LoopBudget {
    pub time: Option<Duration>,
    pub max_iterations: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct LoopOptions {
    pub heuristic: HeuristicConfig,
    pub budget: LoopBudget,
    /// Stop once the relative gap at the initial belief is at most this.
    pub gap_target: f64,
    /// Precision handed to the MDP checker.
    pub precision: f64,
    pub strict_cutoff: bool,
    /// Run the bounded belief exploration for the pessimistic side.
    pub explore: bool,
}

impl Default for LoopOptions {
    fn default() -> Self {
        LoopOptions {
            heuristic: HeuristicConfig::default(),
            budget: LoopBudget {
                time: Some(Duration::from_secs(60)),
                max_iterations: None,
            },
            gap_target: 1e-6,
            precision: 1e-6,
            strict_cutoff: false,
            explore: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    GapMet,
    ThresholdDecided,
    Timeout,
    Exact,
    /// A single pass finished within its budget without closing the gap.
    Done,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::GapMet => "gap-met",
            Status::ThresholdDecided => "threshold-decided",
            Status::Timeout => "timeout",
            Status::Exact => "exact",
            Status::Done => "done",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub abstraction_states: usize,
    pub explored: usize,
    pub rewired: usize,
    pub cut_off: usize,
    pub exploration_states: usize,
    pub lower: f64,
    pub upper: f64,
    pub best_lower: f64,
    pub best_upper: f64,
    /// Observations whose resolution was raised, with the new resolution.
    pub refined: Vec<(usize, u64)>,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug)]
pub struct LoopOutcome<T: Scalar> {
    pub ledger: BoundsLedger,
    pub abstraction: Option<AbstractionMdp<T>>,
    pub foundation: Foundation<T>,
    pub log: Vec<IterationLog>,
    pub status: Status,
    pub iterations: usize,
    /// Whether the threshold query holds, once decided.
    pub threshold_holds: Option<bool>,
}

impl<T: Scalar> LoopOutcome<T> {
    pub fn bounds(&self) -> (f64, f64) {
        self.ledger.result()
    }
}

/// Fully observable values, guessed policies and the ledger built on them.
pub struct Bootstrap<T> {
    pub mdp_values: ValueResult,
    pub policies: PolicyGuess<T>,
    pub ledger: BoundsLedger,
}

/// Base bounds for a prepared model.
pub fn bootstrap<T: Scalar>(pomdp: &Pomdp<T>, spec: &Specification<T>) -> Result<Bootstrap<T>> {
    let mdp_values = underlying_mdp_values(pomdp, spec)?;
    let policies = guess_lower_bound_policies(pomdp, spec, &mdp_values)?;
    let ledger = BoundsLedger::new(
        spec.direction,
        optimistic_vector(&mdp_values),
        policies.sound_vectors(spec.direction),
    );
    Ok(Bootstrap {
        mdp_values,
        policies,
        ledger,
    })
}

/// Whether the threshold of `spec` is settled by `(lower, upper)`.
pub fn threshold_verdict<T: Scalar>(
    spec: &Specification<T>,
    lower: f64,
    upper: f64,
) -> Option<bool> {
    let threshold = spec.threshold.as_ref()?;
    let lambda = threshold.value.to_f64();
    match threshold.comparison {
        Comparison::AtMost if upper <= lambda => Some(true),
        Comparison::AtMost if lower > lambda => Some(false),
        Comparison::AtLeast if lower >= lambda => Some(true),
        Comparison::AtLeast if upper < lambda => Some(false),
        _ => None,
    }
}

struct Clock {
    start: Instant,
    deadline: Option<Instant>,
}

impl Clock {
    fn new(time: Option<Duration>) -> Self {
        let start = Instant::now();
        Clock {
            start,
            deadline: time.map(|t| start + t),
        }
    }

    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

struct Explored {
    lower: f64,
    upper: f64,
    states: usize,
    complete: bool,
}

/// Bounds at the initial belief from a bounded exploration with the given
/// frontier values; `None` when the deadline cut it short.
fn exploration_side<T: Scalar>(
    pomdp: &Pomdp<T>,
    spec: &Specification<T>,
    step: u32,
    cutoff: Cutoff<'_>,
    options: &CheckOptions,
) -> Result<Option<Explored>> {
    let budget = ExplorationBudget::new(step);
    let Some(e) = explore_until(pomdp, spec, budget, cutoff, options.deadline)? else {
        return Ok(None);
    };
    let r = check_with(&e.mdp, spec.kind, spec.direction, options)?;
    let (lower, upper) = r.initial_bounds();
    Ok(Some(Explored {
        lower,
        upper,
        states: e.store.len(),
        complete: e.complete,
    }))
}

/// Abstraction refinement: alternates building and checking a grid
/// abstraction (optimistic side) with bounded belief exploration
/// (pessimistic side) until the gap closes, the threshold is decided or
/// the budget runs out.
pub fn refinement_loop<T: Scalar>(
    pomdp: &Pomdp<T>,
    spec: &Specification<T>,
    options: &LoopOptions,
) -> Result<LoopOutcome<T>> {
    spec.validate(pomdp)?;
    let clock = Clock::new(options.budget.time);
    let (pomdp, spec) = prepare_objective(pomdp, spec)?;
    let h = &options.heuristic;
    let mut foundation: Foundation<T> = h.foundation(pomdp.num_observations());
    let Bootstrap {
        mdp_values,
        mut ledger,
        ..
    } = bootstrap(&pomdp, &spec)?;
    let init = pomdp.mdp().initial_state();
    let (l0, u0) = match spec.direction {
        Direction::Max => (ledger.policy_bound().at_state(init), mdp_values.upper[init]),
        Direction::Min => (mdp_values.lower[init], ledger.policy_bound().at_state(init)),
    };
    ledger.record(
        0,
        (l0, BoundSource::Bootstrap),
        (u0, BoundSource::Bootstrap),
    );
    let mut log = vec![IterationLog {
        iteration: 0,
        abstraction_states: 0,
        explored: 0,
        rewired: 0,
        cut_off: 0,
        exploration_states: 0,
        lower: l0,
        upper: u0,
        best_lower: l0,
        best_upper: u0,
        refined: Vec::new(),
        elapsed_s: clock.elapsed(),
    }];
    let finish = |ledger: BoundsLedger,
                  abstraction: Option<AbstractionMdp<T>>,
                  foundation: Foundation<T>,
                  log: Vec<IterationLog>,
                  status: Status| {
        let (l, u) = ledger.result();
        let threshold_holds = threshold_verdict(&spec, l, u);
        let iterations = log.len() - 1;
        LoopOutcome {
            ledger,
            abstraction,
            foundation,
            log,
            status,
            iterations,
            threshold_holds,
        }
    };
    if let Some(status) = stop_status(&spec, &ledger, options, false) {
        return Ok(finish(ledger, None, foundation, log, status));
    }

    let check_options = CheckOptions {
        precision: options.precision,
        deadline: clock.deadline,
        ..CheckOptions::default()
    };
    let mut rho_z = h.rho_z;
    let mut rho_gap = h.rho_gap;
    let mut rho_step = f64::INFINITY;
    let mut previous: Option<AbstractionMdp<T>> = None;
    let mut prev_reach: Option<HashSet<usize>> = None;
    let mut prev_actions: Option<HashMap<usize, Vec<usize>>> = None;
    let mut iteration = 0usize;
    loop {
        iteration += 1;
        let store = previous
            .as_mut()
            .map(|p| std::mem::take(&mut p.store))
            .unwrap_or_default();
        let params = BuildParams {
            rho_gap,
            rho_step,
            never_cut: false,
            prev_reach: prev_reach.as_ref(),
            prev_actions: prev_actions.as_ref(),
            strict: options.strict_cutoff,
            deadline: clock.deadline,
        };
        let built = build(
            &pomdp,
            &spec,
            &foundation,
            &ledger,
            store,
            previous.as_ref(),
            &params,
        )?;
        let abstraction = match built {
            BuildOutcome::Done(a) => *a,
            BuildOutcome::TimedOut(store) => {
                if let Some(p) = previous.as_mut() {
                    p.store = store;
                }
                return Ok(finish(ledger, previous, foundation, log, Status::Timeout));
            }
        };
        let result = check_with(&abstraction.mdp, spec.kind, spec.direction, &check_options)?;
        for s in 0..abstraction.num_states() {
            if let Some(id) = abstraction.belief_id(s) {
                match spec.direction {
                    Direction::Max => ledger.refine(id, f64::NEG_INFINITY, result.upper[s]),
                    Direction::Min => ledger.refine(id, result.lower[s], f64::INFINITY),
                }
            }
        }
        let grid = match spec.direction {
            Direction::Max => result.upper[result.initial],
            Direction::Min => result.lower[result.initial],
        };

        let mut exploration_states = 0;
        let mut exact = false;
        let (mut lower, mut upper) = match spec.direction {
            Direction::Max => (f64::NEG_INFINITY, grid),
            Direction::Min => (grid, f64::INFINITY),
        };
        let (mut lower_src, mut upper_src) = (BoundSource::Abstraction, BoundSource::Abstraction);
        if options.explore && !clock.expired() {
            let step = u32::try_from(iteration).unwrap_or(u32::MAX);
            let cutoff = Cutoff::Bound(ledger.policy_bound());
            if let Some(Explored {
                lower: l,
                upper: u,
                states,
                complete,
            }) = exploration_side(&pomdp, &spec, step, cutoff, &check_options)?
            {
                exploration_states = states;
                match spec.direction {
                    Direction::Max => {
                        lower = l;
                        lower_src = BoundSource::Exploration;
                    }
                    Direction::Min => {
                        upper = u;
                        upper_src = BoundSource::Exploration;
                    }
                }
                // Float exploration merges nearly equal beliefs, so completeness
                // only settles the value in exact arithmetic.
                if complete && T::EXACT {
                    exact = true;
                    lower = l;
                    upper = u;
                    lower_src = BoundSource::Exploration;
                    upper_src = BoundSource::Exploration;
                }
            }
        }
        ledger.record(iteration, (lower, lower_src), (upper, upper_src));

        // Choose where to refine next.
        let optimal = epsilon_optimal_actions(&result, h.rho_sigma);
        let reach = reachable_under(&abstraction.mdp, &optimal);
        let mut reach_ids = HashSet::new();
        let mut actions = HashMap::new();
        let mut by_obs: BTreeMap<usize, Vec<Belief<T>>> = BTreeMap::new();
        for &s in &reach {
            let Some(id) = abstraction.belief_id(s) else {
                continue;
            };
            reach_ids.insert(id);
            actions.insert(id, optimal[s].clone());
            if abstraction.status(s) != StateStatus::Explored {
                continue;
            }
            for &a in &optimal[s] {
                for next in abstraction.successors(id, a).unwrap_or(&[]) {
                    if sink_kind(&spec, next).is_none() {
                        by_obs.entry(next.obs()).or_default().push(next.clone());
                    }
                }
            }
        }
        let scores: BTreeMap<usize, f64> = by_obs
            .iter()
            .map(|(&z, beliefs)| (z, score_observation(z, beliefs, &foundation)))
            .collect();
        let extension = extend_foundation(&mut foundation, &scores, rho_z, h.f_z);
        rho_z = extension.next_rho_z;
        rho_gap *= h.f_gap;
        rho_step = h.f_step * abstraction.num_states() as f64;
        let (best_lower, best_upper) = ledger.result();
        log.push(IterationLog {
            iteration,
            abstraction_states: abstraction.num_states(),
            explored: abstraction.explored,
            rewired: abstraction.rewired,
            cut_off: abstraction.cut_off,
            exploration_states,
            lower,
            upper,
            best_lower,
            best_upper,
            refined: extension
                .extended
                .iter()
                .map(|&z| (z, foundation.resolution(z)))
                .collect(),
            elapsed_s: clock.elapsed(),
        });
        prev_reach = Some(reach_ids);
        prev_actions = Some(actions);

        let out_of_budget = clock.expired()
            || options
                .budget
                .max_iterations
                .is_some_and(|m| iteration >= m);
        if let Some(status) = stop_status(&spec, &ledger, options, exact) {
            return Ok(finish(ledger, Some(abstraction), foundation, log, status));
        }
        if out_of_budget {
            return Ok(finish(
                ledger,
                Some(abstraction),
                foundation,
                log,
                Status::Timeout,
            ));
        }
        previous = Some(abstraction);
    }
}

fn stop_status<T: Scalar>(
    spec: &Specification<T>,
    ledger: &BoundsLedger,
    options: &LoopOptions,
    exact: bool,
) -> Option<Status> {
    let (l, u) = ledger.result();
    if exact {
        Some(Status::Exact)
    } else if threshold_verdict(spec, l, u).is_some() {
        Some(Status::ThresholdDecided)
    } else if ledger.gap() <= options.gap_target {
        Some(Status::GapMet)
    } else {
        None
    }
}

/// Bounded belief exploration alone, with growing step budgets. The
/// frontier is valued by the guessed policies on one side and by the fully
/// observable values on the other.
pub fn exploration_loop<T: Scalar>(
    pomdp: &Pomdp<T>,
    spec: &Specification<T>,
    options: &LoopOptions,
) -> Result<LoopOutcome<T>> {
    spec.validate(pomdp)?;
    let clock = Clock::new(options.budget.time);
    let (pomdp, spec) = prepare_objective(pomdp, spec)?;
    let Bootstrap { mut ledger, .. } = bootstrap(&pomdp, &spec)?;
    let optimistic = BeliefBound {
        vectors: vec![ledger.optimistic_values().to_vec()],
        take_max: spec.direction == Direction::Min,
    };
    let check_options = CheckOptions {
        precision: options.precision,
        deadline: clock.deadline,
        ..CheckOptions::default()
    };
    let mut log = Vec::new();
    let mut status = Status::Timeout;
    let mut step = 0u32;
    while !clock.expired() {
        step += 1;
        let pessimistic = Cutoff::Bound(ledger.policy_bound());
        let hopeful = Cutoff::Bound(&optimistic);
        let (lo_cut, hi_cut) = match spec.direction {
            Direction::Max => (pessimistic, hopeful),
            Direction::Min => (hopeful, pessimistic),
        };
        let Some(low) = exploration_side(&pomdp, &spec, step, lo_cut, &check_options)? else {
            break;
        };
        let Some(high) = exploration_side(&pomdp, &spec, step, hi_cut, &check_options)? else {
            break;
        };
        let (l, u, states, complete) = (low.lower, high.upper, low.states, low.complete);
        ledger.record(
            step as usize,
            (l, BoundSource::Exploration),
            (u, BoundSource::Exploration),
        );
        let (best_lower, best_upper) = ledger.result();
        log.push(IterationLog {
            iteration: step as usize,
            abstraction_states: 0,
            explored: 0,
            rewired: 0,
            cut_off: 0,
            exploration_states: states,
            lower: l,
            upper: u,
            best_lower,
            best_upper,
            refined: Vec::new(),
            elapsed_s: clock.elapsed(),
        });
        if let Some(s) = stop_status(&spec, &ledger, options, complete && T::EXACT) {
            status = s;
            break;
        }
        if options
            .budget
            .max_iterations
            .is_some_and(|m| step as usize >= m)
        {
            break;
        }
    }
    let (l, u) = ledger.result();
    Ok(LoopOutcome {
        threshold_holds: threshold_verdict(&spec, l, u),
        ledger,
        abstraction: None,
        foundation: options.heuristic.foundation(pomdp.num_observations()),
        iterations: log.len(),
        log,
        status,
    })
}

/// A single abstraction at a fixed resolution, with no cut-offs.
pub fn single_shot<T: Scalar>(
    pomdp: &Pomdp<T>,
    spec: &Specification<T>,
    resolution: u64,
    options: &LoopOptions,
) -> Result<LoopOutcome<T>> {
    spec.validate(pomdp)?;
    let clock = Clock::new(options.budget.time);
    let (pomdp, spec) = prepare_objective(pomdp, spec)?;
    let Bootstrap {
        mdp_values,
        mut ledger,
        ..
    } = bootstrap(&pomdp, &spec)?;
    let foundation = Foundation::new(
        pomdp.num_observations(),
        resolution,
        options.heuristic.f_r,
        options.heuristic.scheme,
    );
    let params = BuildParams {
        rho_gap: 0.0,
        rho_step: f64::INFINITY,
        never_cut: true,
        prev_reach: None,
        prev_actions: None,
        strict: false,
        deadline: clock.deadline,
    };
    let init = pomdp.mdp().initial_state();
    let policy = ledger.policy_bound().at_state(init);
    let built = build(
        &pomdp,
        &spec,
        &foundation,
        &ledger,
        BeliefStore::new(),
        None,
        &params,
    )?;
    let BuildOutcome::Done(abstraction) = built else {
        let (lower, upper) = match spec.direction {
            Direction::Max => (policy, mdp_values.upper[init]),
            Direction::Min => (mdp_values.lower[init], policy),
        };
        ledger.record(
            0,
            (lower, BoundSource::Bootstrap),
            (upper, BoundSource::Bootstrap),
        );
        return Ok(LoopOutcome {
            threshold_holds: threshold_verdict(&spec, lower, upper),
            ledger,
            abstraction: None,
            foundation,
            log: Vec::new(),
            status: Status::Timeout,
            iterations: 0,
        });
    };
    let check_options = CheckOptions {
        precision: options.precision,
        deadline: clock.deadline,
        ..CheckOptions::default()
    };
    let result = check_with(&abstraction.mdp, spec.kind, spec.direction, &check_options)?;
    let (lower, upper) = match spec.direction {
        Direction::Max => (
            policy,
            result.upper[result.initial].min(mdp_values.upper[init]),
        ),
        Direction::Min => (
            result.lower[result.initial].max(mdp_values.lower[init]),
            policy,
        ),
    };
    let (lower_src, upper_src) = match spec.direction {
        Direction::Max => (BoundSource::Bootstrap, BoundSource::Abstraction),
        Direction::Min => (BoundSource::Abstraction, BoundSource::Bootstrap),
    };
    ledger.record(1, (lower, lower_src), (upper, upper_src));
    let (best_lower, best_upper) = ledger.result();
    let log = vec![IterationLog {
        iteration: 1,
        abstraction_states: abstraction.num_states(),
        explored: abstraction.explored,
        rewired: 0,
        cut_off: 0,
        exploration_states: 0,
        lower,
        upper,
        best_lower,
        best_upper,
        refined: Vec::new(),
        elapsed_s: clock.elapsed(),
    }];
    let status = stop_status(&spec, &ledger, options, false).unwrap_or(Status::Done);
    Ok(LoopOutcome {
        threshold_holds: threshold_verdict(&spec, best_lower, best_upper),
        ledger,
        abstraction: Some(*abstraction),
        foundation,
        log,
        status,
        iterations: 1,
    })
}

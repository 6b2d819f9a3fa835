//! POMDPs, verification objectives and the explicit text format.

mod example;
mod format;
mod underlying;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::scalar::Scalar;

pub use example::{make_running_example, running_example_text, states as running_example_states};
pub use format::{parse_model, serialize_model};
pub use underlying::underlying_mdp_values;

/// Sparse successor distribution, sorted by target state.
pub type Distribution<T> = Vec<(usize, T)>;

#[derive(Clone, Debug, PartialEq)]
pub struct Choice<T> {
    pub action: usize,
    pub distribution: Distribution<T>,
}

/// Finite MDP with a global action alphabet. Absent rows are disabled actions.
#[derive(Clone, Debug, PartialEq)]
pub struct Mdp<T> {
    action_names: Vec<String>,
    initial_state: usize,
    /// Per state, the enabled actions in ascending id order.
    choices: Vec<Vec<Choice<T>>>,
}

impl<T: Scalar> Mdp<T> {
    /// Builds an MDP from raw rows. Duplicate entries are summed, zero entries
    /// dropped and rows sorted; every present row has to sum to one.
    pub fn new(
        action_names: Vec<String>,
        initial_state: usize,
        rows: Vec<Vec<(usize, Distribution<T>)>>,
    ) -> Result<Self, ModelError> {
        let num_states = rows.len();
        if initial_state >= num_states {
            return Err(ModelError::DanglingState {
                id: initial_state,
                count: num_states,
            });
        }
        let mut choices = Vec::with_capacity(num_states);
        for (state, state_rows) in rows.into_iter().enumerate() {
            let mut merged: BTreeMap<usize, BTreeMap<usize, T>> = BTreeMap::new();
            for (action, dist) in state_rows {
                if action >= action_names.len() {
                    return Err(ModelError::Specification(format!(
                        "action id {action} out of range"
                    )));
                }
                let row = merged.entry(action).or_default();
                for (target, p) in dist {
                    if target >= num_states {
                        return Err(ModelError::DanglingState {
                            id: target,
                            count: num_states,
                        });
                    }
                    if p < T::zero() {
                        return Err(ModelError::Negative {
                            state,
                            action: action_names[action].clone(),
                            value: p.render(),
                        });
                    }
                    let entry = row.entry(target).or_insert_with(T::zero);
                    *entry = entry.clone() + p;
                }
            }
            let mut state_choices = Vec::new();
            for (action, row) in merged {
                let distribution: Distribution<T> =
                    row.into_iter().filter(|(_, p)| !p.is_zero()).collect();
                if distribution.is_empty() {
                    continue;
                }
                let sum = distribution
                    .iter()
                    .fold(T::zero(), |acc, (_, p)| acc + p.clone());
                if !sum.is_one_within_tolerance() {
                    return Err(ModelError::RowSum {
                        state,
                        action: action_names[action].clone(),
                        sum: sum.render(),
                    });
                }
                state_choices.push(Choice {
                    action,
                    distribution,
                });
            }
            choices.push(state_choices);
        }
        Ok(Mdp {
            action_names,
            initial_state,
            choices,
        })
    }

    pub fn num_states(&self) -> usize {
        self.choices.len()
    }

    pub fn num_actions(&self) -> usize {
        self.action_names.len()
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    pub fn action_name(&self, action: usize) -> &str {
        &self.action_names[action]
    }

    pub fn action_id(&self, name: &str) -> Option<usize> {
        self.action_names.iter().position(|n| n == name)
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn choices(&self, state: usize) -> &[Choice<T>] {
        &self.choices[state]
    }

    pub fn distribution(&self, state: usize, action: usize) -> Option<&Distribution<T>> {
        self.choices[state]
            .binary_search_by_key(&action, |c| c.action)
            .ok()
            .map(|i| &self.choices[state][i].distribution)
    }

    pub fn enabled_actions(&self, state: usize) -> impl Iterator<Item = usize> + '_ {
        self.choices[state].iter().map(|c| c.action)
    }

    pub fn num_choices(&self) -> usize {
        self.choices.iter().map(Vec::len).sum()
    }
}

/// An MDP whose states emit observations.
#[derive(Clone, Debug, PartialEq)]
pub struct Pomdp<T> {
    mdp: Mdp<T>,
    obs_of: Vec<usize>,
    /// Observation -> sorted states carrying it.
    obs_classes: Vec<Vec<usize>>,
}

impl<T: Scalar> Pomdp<T> {
    pub fn new(
        mdp: Mdp<T>,
        num_observations: usize,
        obs_of: Vec<usize>,
    ) -> Result<Self, ModelError> {
        if obs_of.len() != mdp.num_states() {
            return Err(ModelError::MissingObservation(
                obs_of.len().min(mdp.num_states()),
            ));
        }
        let mut obs_classes = vec![Vec::new(); num_observations];
        for (state, &z) in obs_of.iter().enumerate() {
            if z >= num_observations {
                return Err(ModelError::DanglingObservation {
                    id: z,
                    count: num_observations,
                });
            }
            obs_classes[z].push(state);
        }
        for state in 0..mdp.num_states() {
            if mdp.choices(state).is_empty() {
                return Err(ModelError::Deadlock(state));
            }
        }
        for (z, class) in obs_classes.iter().enumerate() {
            if let Some((&first, rest)) = class.split_first() {
                let expected: Vec<usize> = mdp.enabled_actions(first).collect();
                for &other in rest {
                    if !mdp.enabled_actions(other).eq(expected.iter().copied()) {
                        return Err(ModelError::ObservationActionMismatch {
                            observation: z,
                            first,
                            second: other,
                        });
                    }
                }
            }
        }
        Ok(Pomdp {
            mdp,
            obs_of,
            obs_classes,
        })
    }

    pub fn mdp(&self) -> &Mdp<T> {
        &self.mdp
    }

    pub fn num_states(&self) -> usize {
        self.mdp.num_states()
    }

    pub fn num_observations(&self) -> usize {
        self.obs_classes.len()
    }

    pub fn observation(&self, state: usize) -> usize {
        self.obs_of[state]
    }

    pub fn observations(&self) -> &[usize] {
        &self.obs_of
    }

    /// States with observation `z`, ascending.
    pub fn class(&self, z: usize) -> &[usize] {
        &self.obs_classes[z]
    }

    /// Largest observation class, `max_z |O⁻¹(z)|`.
    pub fn max_class_size(&self) -> usize {
        self.obs_classes.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Enabled actions for observation `z` (empty if `z` labels no state).
    pub fn observation_actions(&self, z: usize) -> Vec<usize> {
        match self.obs_classes[z].first() {
            Some(&s) => self.mdp.enabled_actions(s).collect(),
            None => Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjectiveKind {
    ReachProbability,
    ReachAvoidProbability,
    ExpectedTotalReward,
}

impl ObjectiveKind {
    pub fn is_probability(self) -> bool {
        !matches!(self, ObjectiveKind::ExpectedTotalReward)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            ObjectiveKind::ReachProbability => "Preach",
            ObjectiveKind::ReachAvoidProbability => "Preachavoid",
            ObjectiveKind::ExpectedTotalReward => "Rtotal",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Max,
    Min,
}

impl Direction {
    pub fn keyword(self) -> &'static str {
        match self {
            Direction::Max => "max",
            Direction::Min => "min",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    AtMost,
    AtLeast,
}

impl Comparison {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Threshold<T> {
    pub comparison: Comparison,
    pub value: T,
}

/// What to verify on a POMDP: the objective, its optimisation direction and
/// the labelled state sets.
#[derive(Clone, Debug, PartialEq)]
pub struct Specification<T> {
    pub kind: ObjectiveKind,
    pub direction: Direction,
    /// `Bad` for probabilities, the goal for rewards.
    pub target: BTreeSet<usize>,
    pub avoid: BTreeSet<usize>,
    /// Nonnegative action rewards, keyed by (state, action).
    pub rewards: BTreeMap<(usize, usize), T>,
    pub threshold: Option<Threshold<T>>,
}

impl<T: Scalar> Specification<T> {
    pub fn reach(direction: Direction, target: impl IntoIterator<Item = usize>) -> Self {
        Specification {
            kind: ObjectiveKind::ReachProbability,
            direction,
            target: target.into_iter().collect(),
            avoid: BTreeSet::new(),
            rewards: BTreeMap::new(),
            threshold: None,
        }
    }

    pub fn reward(&self, state: usize, action: usize) -> T {
        self.rewards
            .get(&(state, action))
            .cloned()
            .unwrap_or_else(T::zero)
    }

    pub fn is_target(&self, state: usize) -> bool {
        self.target.contains(&state)
    }

    pub fn is_avoid(&self, state: usize) -> bool {
        self.avoid.contains(&state)
    }

    pub fn validate(&self, pomdp: &Pomdp<T>) -> Result<(), ModelError> {
        let n = pomdp.num_states();
        for &s in self.target.iter().chain(self.avoid.iter()) {
            if s >= n {
                return Err(ModelError::DanglingState { id: s, count: n });
            }
        }
        if self.target.is_empty() {
            return Err(ModelError::EmptyTarget);
        }
        if let Some(&s) = self.target.intersection(&self.avoid).next() {
            return Err(ModelError::TargetAvoidOverlap(s));
        }
        if !self.avoid.is_empty() && self.kind != ObjectiveKind::ReachAvoidProbability {
            return Err(ModelError::Specification(
                "avoid states are only meaningful for Preachavoid".into(),
            ));
        }
        if !self.rewards.is_empty() && self.kind != ObjectiveKind::ExpectedTotalReward {
            return Err(ModelError::Specification(
                "rewards are only meaningful for Rtotal".into(),
            ));
        }
        for (&(s, a), r) in &self.rewards {
            if s >= n {
                return Err(ModelError::DanglingState { id: s, count: n });
            }
            if pomdp.mdp().distribution(s, a).is_none() {
                return Err(ModelError::Specification(format!(
                    "reward on disabled action {} of state {s}",
                    pomdp.mdp().action_name(a)
                )));
            }
            if *r < T::zero() {
                return Err(ModelError::Negative {
                    state: s,
                    action: pomdp.mdp().action_name(a).to_string(),
                    value: r.render(),
                });
            }
        }
        if let Some(threshold) = &self.threshold {
            if self.kind.is_probability()
                && !(threshold.value > T::zero() && threshold.value < T::one())
            {
                return Err(ModelError::ThresholdOutOfRange(threshold.value.render()));
            }
            if threshold.value < T::zero() {
                return Err(ModelError::ThresholdOutOfRange(threshold.value.render()));
            }
        }
        Ok(())
    }
}

/// Makes target and avoid states absorbing and gives them observations of
/// their own, so every observation class is entirely target, entirely avoid
/// or neither. Values are unchanged; state ids are preserved.
pub fn prepare_objective<T: Scalar>(
    pomdp: &Pomdp<T>,
    spec: &Specification<T>,
) -> Result<(Pomdp<T>, Specification<T>), ModelError> {
    let mdp = pomdp.mdp();
    let n = mdp.num_states();
    let special = |s: usize| spec.is_target(s) || spec.is_avoid(s);
    let rows = (0..n)
        .map(|s| {
            mdp.choices(s)
                .iter()
                .map(|c| {
                    let dist = if special(s) {
                        vec![(s, T::one())]
                    } else {
                        c.distribution.clone()
                    };
                    (c.action, dist)
                })
                .collect()
        })
        .collect();
    let mut obs_of = pomdp.observations().to_vec();
    let mut num_obs = pomdp.num_observations();
    for z in 0..pomdp.num_observations() {
        let class = pomdp.class(z);
        let groups: [Vec<usize>; 3] = [
            class.iter().copied().filter(|&s| !special(s)).collect(),
            class
                .iter()
                .copied()
                .filter(|&s| spec.is_target(s))
                .collect(),
            class
                .iter()
                .copied()
                .filter(|&s| spec.is_avoid(s))
                .collect(),
        ];
        let mut kept_original = false;
        for group in groups.iter().filter(|g| !g.is_empty()) {
            if !kept_original {
                kept_original = true;
                continue;
            }
            for &s in group {
                obs_of[s] = num_obs;
            }
            num_obs += 1;
        }
    }
    let prepared = Pomdp::new(
        Mdp::new(mdp.action_names().to_vec(), mdp.initial_state(), rows)?,
        num_obs,
        obs_of,
    )?;
    Ok((prepared, spec.clone()))
}

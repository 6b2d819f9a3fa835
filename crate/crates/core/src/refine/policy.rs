use std::collections::BTreeSet;

use crate::check::{
    epsilon_optimal_actions, evaluate_markov_chain, ChainValues, SparseMdp, ValueResult,
};
use crate::error::Result;
use crate::model::{Direction, Pomdp, Specification};
use crate::scalar::Scalar;

/// Full enumeration of deterministic policies is used up to this many.
pub const ENUMERATION_LIMIT: usize = 64;

/// Memoryless observation-based policy playing the listed actions of each
/// observation uniformly at random.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObservationPolicy {
    pub choices: Vec<Vec<usize>>,
}

impl ObservationPolicy {
    pub fn is_deterministic(&self) -> bool {
        self.choices.iter().all(|c| c.len() <= 1)
    }
}

#[derive(Clone, Debug)]
pub struct PolicyGuess<T> {
    pub policies: Vec<ObservationPolicy>,
    pub values: Vec<ChainValues<T>>,
    /// Index of the policy that is best at the initial state.
    pub best: usize,
}

impl<T: Scalar> PolicyGuess<T> {
    /// Per-state values on the sound side of the optimisation direction
    /// (lower for max, upper for min).
    pub fn sound_vectors(&self, direction: Direction) -> Vec<Vec<f64>> {
        self.values
            .iter()
            .map(|v| match direction {
                Direction::Max => v.lower.clone(),
                Direction::Min => v.upper.clone(),
            })
            .collect()
    }

    pub fn best_initial(&self, direction: Direction, initial: usize) -> f64 {
        self.sound_vectors(direction)[self.best][initial]
    }
}

/// The Markov chain a policy induces on the POMDP's states.
pub fn induced_chain<T: Scalar>(
    pomdp: &Pomdp<T>,
    spec: &Specification<T>,
    policy: &ObservationPolicy,
) -> SparseMdp<T> {
    let mdp = pomdp.mdp();
    let n = mdp.num_states();
    let mut chain = SparseMdp::with_states(n);
    chain.set_initial(mdp.initial_state());
    for s in 0..n {
        chain.set_target(s, spec.is_target(s));
        chain.set_avoid(s, spec.is_avoid(s));
        let actions = &policy.choices[pomdp.observation(s)];
        let weight = T::from_ratio(1, actions.len() as i64);
        let mut entries = Vec::new();
        let mut reward = T::zero();
        for &a in actions {
            let dist = mdp
                .distribution(s, a)
                .expect("policy plays enabled actions");
            entries.extend(dist.iter().map(|(t, p)| (*t, p.clone() * weight.clone())));
            reward = reward + spec.reward(s, a) * weight.clone();
        }
        chain
            .add_row(s, 0, entries, reward)
            .expect("mixture of stochastic rows is stochastic");
    }
    chain
}

fn relevant_states<T: Scalar>(pomdp: &Pomdp<T>, spec: &Specification<T>, z: usize) -> Vec<usize> {
    pomdp
        .class(z)
        .iter()
        .copied()
        .filter(|&s| !spec.is_target(s) && !spec.is_avoid(s))
        .collect()
}

/// Candidate observation-based policies derived from the fully observable
/// solution, each evaluated exactly (rational mode) or soundly (float).
pub fn guess_lower_bound_policies<T: Scalar>(
    pomdp: &Pomdp<T>,
    spec: &Specification<T>,
    mdp_result: &ValueResult,
) -> Result<PolicyGuess<T>> {
    let num_obs = pomdp.num_observations();
    let actions: Vec<Vec<usize>> = (0..num_obs).map(|z| pomdp.observation_actions(z)).collect();
    let optimal = epsilon_optimal_actions(mdp_result, 1e-6);
    let mut candidates: BTreeSet<ObservationPolicy> = BTreeSet::new();

    // Uniform over the union of optimal actions, and a majority vote.
    let mut uniform = Vec::with_capacity(num_obs);
    let mut majority = Vec::with_capacity(num_obs);
    for z in 0..num_obs {
        let states = relevant_states(pomdp, spec, z);
        let mut votes = vec![0usize; pomdp.mdp().num_actions()];
        let mut union = BTreeSet::new();
        for &s in &states {
            for &a in &optimal[s] {
                union.insert(a);
                votes[a] += 1;
            }
        }
        if union.is_empty() {
            uniform.push(actions[z].iter().copied().take(1).collect());
            majority.push(actions[z].iter().copied().take(1).collect());
            continue;
        }
        uniform.push(union.iter().copied().collect());
        let best = union
            .iter()
            .copied()
            .max_by(|&a, &b| votes[a].cmp(&votes[b]).then(b.cmp(&a)))
            .expect("nonempty");
        majority.push(vec![best]);
    }
    candidates.insert(ObservationPolicy { choices: uniform });
    candidates.insert(ObservationPolicy { choices: majority });

    // Constant policies, falling back to the first enabled action.
    for a in 0..pomdp.mdp().num_actions() {
        let choices = actions
            .iter()
            .map(|acts| {
                if acts.contains(&a) {
                    vec![a]
                } else {
                    acts.iter().copied().take(1).collect()
                }
            })
            .collect();
        candidates.insert(ObservationPolicy { choices });
    }

    // Every deterministic policy when there are few.
    let decisive: Vec<usize> = (0..num_obs)
        .filter(|&z| !relevant_states(pomdp, spec, z).is_empty() && actions[z].len() > 1)
        .collect();
    let count = decisive
        .iter()
        .try_fold(1usize, |acc, &z| acc.checked_mul(actions[z].len()));
    if matches!(count, Some(c) if c <= ENUMERATION_LIMIT) {
        let base: Vec<Vec<usize>> = actions
            .iter()
            .map(|a| a.iter().copied().take(1).collect())
            .collect();
        let mut digits = vec![0usize; decisive.len()];
        loop {
            let mut choices = base.clone();
            for (i, &z) in decisive.iter().enumerate() {
                choices[z] = vec![actions[z][digits[i]]];
            }
            candidates.insert(ObservationPolicy { choices });
            let mut i = 0;
            while i < digits.len() {
                digits[i] += 1;
                if digits[i] < actions[decisive[i]].len() {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
            if i == digits.len() {
                break;
            }
        }
    }

    let policies: Vec<ObservationPolicy> = candidates.into_iter().collect();
    let mut values = Vec::with_capacity(policies.len());
    for policy in &policies {
        let chain = induced_chain(pomdp, spec, policy);
        values.push(evaluate_markov_chain(&chain, spec.kind)?);
    }
    let initial = pomdp.mdp().initial_state();
    let sound = |v: &ChainValues<T>| match spec.direction {
        Direction::Max => v.lower[initial],
        Direction::Min => v.upper[initial],
    };
    let mut best = 0;
    for i in 1..values.len() {
        let better = match spec.direction {
            Direction::Max => sound(&values[i]) > sound(&values[best]),
            Direction::Min => sound(&values[i]) < sound(&values[best]),
        };
        if better {
            best = i;
        }
    }
    Ok(PolicyGuess {
        policies,
        values,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::running_example_states::*;
    use crate::model::{make_running_example, underlying_mdp_values};
    use crate::scalar::Rational;

    #[test]
    fn all_a_policy_value() {
        let (pomdp, spec) = make_running_example::<Rational>();
        let policy = ObservationPolicy {
            choices: vec![vec![A]; 5],
        };
        let chain = induced_chain(&pomdp, &spec, &policy);
        let values = evaluate_markov_chain(&chain, spec.kind).unwrap();
        assert_eq!(
            values.exact.unwrap()[S0],
            Some(Rational::from_ratio(37, 64))
        );
    }

    #[test]
    fn guesses_include_all_a() {
        let (pomdp, spec) = make_running_example::<Rational>();
        let mdp = underlying_mdp_values(&pomdp, &spec).unwrap();
        let guess = guess_lower_bound_policies(&pomdp, &spec, &mdp).unwrap();
        let all_a = ObservationPolicy {
            choices: vec![vec![A]; 5],
        };
        assert!(guess.policies.contains(&all_a));
        // Four decisive observations with two actions each.
        assert!(guess.policies.len() >= 16);
        assert!(guess.best_initial(Direction::Max, S0) >= 37.0 / 64.0 - 1e-12);
    }
}

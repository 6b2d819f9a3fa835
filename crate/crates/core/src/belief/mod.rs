//! Beliefs, Bayesian updates and lazily explored belief MDPs.

mod explore;
mod finite;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::model::Pomdp;
use crate::scalar::Scalar;

pub(crate) use explore::{cut_mass, explore_until, sink_kind, SinkKind, Sinks};
pub use explore::{
    explore_belief_mdp, export_graph, BeliefBound, Cutoff, Exploration, ExplorationBudget,
};
pub use finite::{finite_belief_check, Finiteness};

/// A distribution over the states of one observation class.
#[derive(Clone, Debug, PartialEq)]
pub struct Belief<T> {
    obs: usize,
    support: Vec<usize>,
    probs: Vec<T>,
}

/// Interning key: the observation plus canonicalised entries.
pub type BeliefKey<K> = (usize, Vec<(usize, K)>);

impl<T: Scalar> Belief<T> {
    pub fn dirac(obs: usize, state: usize) -> Self {
        Belief {
            obs,
            support: vec![state],
            probs: vec![T::one()],
        }
    }

    /// Builds a belief from entries that already sum to one. Duplicates are
    /// summed and zero entries dropped.
    pub fn new(obs: usize, entries: impl IntoIterator<Item = (usize, T)>) -> Self {
        let mut merged: BTreeMap<usize, T> = BTreeMap::new();
        for (s, p) in entries {
            let slot = merged.entry(s).or_insert_with(T::zero);
            *slot = slot.clone() + p;
        }
        let (support, probs) = merged.into_iter().filter(|(_, p)| !p.is_zero()).unzip();
        Belief {
            obs,
            support,
            probs,
        }
    }

    /// Like [`Belief::new`] but rescales the entries to sum to one; in float
    /// mode negligible entries are dropped first.
    pub fn normalized(obs: usize, entries: impl IntoIterator<Item = (usize, T)>) -> Self {
        let raw = Belief::new(obs, entries);
        let kept: Vec<(usize, T)> = raw
            .iter()
            .filter(|(_, p)| !p.is_negligible())
            .map(|(s, p)| (s, p.clone()))
            .collect();
        let total = kept.iter().fold(T::zero(), |acc, (_, p)| acc + p.clone());
        Belief::new(obs, kept.into_iter().map(|(s, p)| (s, p / total.clone())))
    }

    pub fn obs(&self) -> usize {
        self.obs
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn is_dirac(&self) -> bool {
        self.support.len() == 1
    }

    pub fn get(&self, state: usize) -> T {
        match self.support.binary_search(&state) {
            Ok(i) => self.probs[i].clone(),
            Err(_) => T::zero(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &T)> + '_ {
        self.support.iter().copied().zip(self.probs.iter())
    }

    /// `Σ_s b(s) · values[s]` in floating point.
    pub fn expectation(&self, values: &[f64]) -> f64 {
        self.iter()
            .map(|(s, p)| {
                let v = values[s];
                if v == 0.0 {
                    0.0
                } else {
                    p.to_f64() * v
                }
            })
            .sum()
    }

    pub fn key(&self) -> BeliefKey<T::Key> {
        (self.obs, self.iter().map(|(s, p)| (s, p.key())).collect())
    }
}

impl<T: Scalar> fmt::Display for Belief<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (s, p)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "s{s}: {}", p.render())?;
        }
        f.write_str("}")
    }
}

/// Interning table assigning dense ids to beliefs.
#[derive(Clone, Debug)]
pub struct BeliefStore<T: Scalar> {
    ids: HashMap<BeliefKey<T::Key>, usize>,
    beliefs: Vec<Belief<T>>,
    per_observation: BTreeMap<usize, usize>,
}

impl<T: Scalar> Default for BeliefStore<T> {
    fn default() -> Self {
        BeliefStore {
            ids: HashMap::new(),
            beliefs: Vec::new(),
            per_observation: BTreeMap::new(),
        }
    }
}

impl<T: Scalar> BeliefStore<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id and whether the belief was new.
    pub fn intern(&mut self, belief: Belief<T>) -> (usize, bool) {
        let key = belief.key();
        if let Some(&id) = self.ids.get(&key) {
            return (id, false);
        }
        let id = self.beliefs.len();
        *self.per_observation.entry(belief.obs).or_default() += 1;
        self.ids.insert(key, id);
        self.beliefs.push(belief);
        (id, true)
    }

    pub fn lookup(&self, belief: &Belief<T>) -> Option<usize> {
        self.ids.get(&belief.key()).copied()
    }

    pub fn get(&self, id: usize) -> &Belief<T> {
        &self.beliefs[id]
    }

    pub fn len(&self) -> usize {
        self.beliefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beliefs.is_empty()
    }

    pub fn count_for_observation(&self, z: usize) -> usize {
        self.per_observation.get(&z).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Belief<T>)> + '_ {
        self.beliefs.iter().enumerate()
    }
}

/// The initial Dirac belief.
pub fn initial_belief<T: Scalar>(pomdp: &Pomdp<T>) -> Belief<T> {
    let s = pomdp.mdp().initial_state();
    Belief::dirac(pomdp.observation(s), s)
}

fn ensure_enabled<T: Scalar>(pomdp: &Pomdp<T>, b: &Belief<T>, action: usize) -> Result<()> {
    let s = b.support[0];
    if pomdp.mdp().distribution(s, action).is_none() {
        return Err(Error::DisabledAction {
            action,
            observation: b.obs,
        });
    }
    Ok(())
}

/// Unnormalised successor mass per observation, ascending by observation.
fn successor_mass<T: Scalar>(
    pomdp: &Pomdp<T>,
    b: &Belief<T>,
    action: usize,
) -> BTreeMap<usize, BTreeMap<usize, T>> {
    let mut mass: BTreeMap<usize, BTreeMap<usize, T>> = BTreeMap::new();
    for (s, p) in b.iter() {
        let dist = pomdp
            .mdp()
            .distribution(s, action)
            .expect("action enabled for the whole class");
        for (t, q) in dist {
            let slot = mass
                .entry(pomdp.observation(*t))
                .or_default()
                .entry(*t)
                .or_insert_with(T::zero);
            *slot = slot.clone() + p.clone() * q.clone();
        }
    }
    mass
}

/// Probability of observing `z` after playing `action` in `b`.
pub fn obs_probability<T: Scalar>(
    pomdp: &Pomdp<T>,
    b: &Belief<T>,
    action: usize,
    z: usize,
) -> Result<T> {
    ensure_enabled(pomdp, b, action)?;
    let mass = successor_mass(pomdp, b, action);
    Ok(mass.get(&z).map_or_else(T::zero, |m| {
        m.values().fold(T::zero(), |acc, p| acc + p.clone())
    }))
}

/// The belief after playing `action` in `b` and observing `z`.
pub fn next_belief<T: Scalar>(
    pomdp: &Pomdp<T>,
    b: &Belief<T>,
    action: usize,
    z: usize,
) -> Result<Belief<T>> {
    ensure_enabled(pomdp, b, action)?;
    let mass = successor_mass(pomdp, b, action);
    match mass.get(&z) {
        Some(m) if m.values().any(|p| !p.is_negligible()) => Ok(Belief::normalized(
            z,
            m.iter().map(|(s, p)| (*s, p.clone())),
        )),
        _ => Err(Error::ZeroProbabilityObservation {
            action,
            observation: z,
        }),
    }
}

/// All successor beliefs of `b` under `action` with their probabilities,
/// ascending by observation. Float mode prunes negligible observations and
/// renormalises.
pub fn belief_successors<T: Scalar>(
    pomdp: &Pomdp<T>,
    b: &Belief<T>,
    action: usize,
) -> Result<Vec<(Belief<T>, T)>> {
    ensure_enabled(pomdp, b, action)?;
    let mass = successor_mass(pomdp, b, action);
    let mut out: Vec<(Belief<T>, T)> = Vec::with_capacity(mass.len());
    for (z, m) in mass {
        let total = m.values().fold(T::zero(), |acc, p| acc + p.clone());
        if total.is_negligible() {
            continue;
        }
        out.push((Belief::normalized(z, m), total));
    }
    if !T::EXACT {
        let sum = out.iter().fold(T::zero(), |acc, (_, p)| acc + p.clone());
        for (_, p) in &mut out {
            *p = p.clone() / sum.clone();
        }
    }
    Ok(out)
}

/// Expected immediate reward of `action` in `b`.
pub fn belief_reward<T: Scalar>(
    spec: &crate::model::Specification<T>,
    b: &Belief<T>,
    action: usize,
) -> T {
    b.iter().fold(T::zero(), |acc, (s, p)| {
        acc + p.clone() * spec.reward(s, action)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_running_example;
    use crate::model::running_example_states::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn observation_probabilities() {
        let (pomdp, _) = make_running_example::<Rational>();
        let b1 = Belief::dirac(Z0, S0);
        assert_eq!(obs_probability(&pomdp, &b1, A, Z1).unwrap(), q(4, 5));
        assert_eq!(obs_probability(&pomdp, &b1, A, Z_FROWN).unwrap(), q(0, 1));
        let b5 = Belief::new(Z0, [(S0, q(1, 2)), (S5, q(1, 6)), (S6, q(1, 3))]);
        assert_eq!(obs_probability(&pomdp, &b5, A, Z1).unwrap(), q(9, 10));
    }

    #[test]
    fn update_and_successors() {
        let (pomdp, _) = make_running_example::<Rational>();
        let b2 = Belief::new(Z1, [(S1, q(3, 4)), (S2, q(1, 4))]);
        let b3 = next_belief(&pomdp, &b2, A, Z2).unwrap();
        assert_eq!(b3, Belief::new(Z2, [(S3, q(15, 16)), (S4, q(1, 16))]));
        let b1 = Belief::dirac(Z0, S0);
        let succ = belief_successors(&pomdp, &b1, A).unwrap();
        assert_eq!(succ, vec![(b1.clone(), q(1, 5)), (b2, q(4, 5))]);
        assert!(matches!(
            next_belief(&pomdp, &b1, A, Z_FROWN),
            Err(Error::ZeroProbabilityObservation { .. })
        ));
        let frown = Belief::dirac(Z_FROWN, FROWN);
        assert_eq!(
            belief_successors(&pomdp, &frown, B).unwrap(),
            vec![(frown.clone(), q(1, 1))]
        );
    }

    #[test]
    fn interning_is_stable() {
        let mut store = BeliefStore::<f64>::new();
        let (a, new_a) = store.intern(Belief::new(0, [(0, 0.5), (1, 0.5)]));
        let (b, new_b) = store.intern(Belief::new(0, [(1, 0.5 + 1e-13), (0, 0.5 - 1e-13)]));
        assert_eq!((a, new_a, b, new_b), (0, true, 0, false));
        assert_eq!(store.count_for_observation(0), 1);
    }
}

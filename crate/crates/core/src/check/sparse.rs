use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{Pomdp, Specification};
use crate::scalar::Scalar;

/// One action row of a [`SparseMdp`].
#[derive(Clone, Debug, PartialEq)]
pub struct Row<T> {
    pub action: usize,
    pub entries: Vec<(usize, T)>,
    pub reward: T,
}

impl<T: Scalar> Row<T> {
    pub fn probability(&self, column: usize) -> T {
        self.entries
            .iter()
            .find(|(c, _)| *c == column)
            .map_or_else(T::zero, |(_, p)| p.clone())
    }
}

/// Explicit finite MDP with row-grouped transitions and state labels.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMdp<T> {
    rows: Vec<Vec<Row<T>>>,
    initial: usize,
    target: Vec<bool>,
    avoid: Vec<bool>,
}

impl<T: Scalar> Default for SparseMdp<T> {
    fn default() -> Self {
        SparseMdp {
            rows: Vec::new(),
            initial: 0,
            target: Vec::new(),
            avoid: Vec::new(),
        }
    }
}

impl<T: Scalar> SparseMdp<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_states(count: usize) -> Self {
        let mut mdp = Self::new();
        for _ in 0..count {
            mdp.add_state();
        }
        mdp
    }

    pub fn add_state(&mut self) -> usize {
        self.rows.push(Vec::new());
        self.target.push(false);
        self.avoid.push(false);
        self.rows.len() - 1
    }

    pub fn set_initial(&mut self, state: usize) {
        self.initial = state;
    }

    pub fn set_target(&mut self, state: usize, value: bool) {
        self.target[state] = value;
    }

    pub fn set_avoid(&mut self, state: usize, value: bool) {
        self.avoid[state] = value;
    }

    /// Appends a row; duplicates are merged, zeros dropped and the sum checked.
    pub fn add_row(
        &mut self,
        state: usize,
        action: usize,
        entries: impl IntoIterator<Item = (usize, T)>,
        reward: T,
    ) -> Result<()> {
        let n = self.rows.len();
        let mut merged: BTreeMap<usize, T> = BTreeMap::new();
        for (column, p) in entries {
            if column >= n {
                return Err(Error::MalformedMatrix(format!(
                    "state {state}: column {column} out of range"
                )));
            }
            if p < T::zero() {
                return Err(Error::MalformedMatrix(format!(
                    "state {state}: negative probability {p}"
                )));
            }
            let slot = merged.entry(column).or_insert_with(T::zero);
            *slot = slot.clone() + p;
        }
        let entries: Vec<(usize, T)> = merged.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        let sum = entries
            .iter()
            .fold(T::zero(), |acc, (_, p)| acc + p.clone());
        if !sum.is_one_within_tolerance() {
            return Err(Error::MalformedMatrix(format!(
                "state {state}, action {action}: row sums to {sum}"
            )));
        }
        self.rows[state].push(Row {
            action,
            entries,
            reward,
        });
        Ok(())
    }

    /// Drops all rows of a state (used when an abstraction state is rewired).
    pub fn clear_rows(&mut self, state: usize) {
        self.rows[state].clear();
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn num_transitions(&self) -> usize {
        self.rows.iter().flatten().map(|r| r.entries.len()).sum()
    }

    pub fn rows(&self, state: usize) -> &[Row<T>] {
        &self.rows[state]
    }

    pub fn row(&self, state: usize, action: usize) -> Option<&Row<T>> {
        self.rows[state].iter().find(|r| r.action == action)
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn is_target(&self, state: usize) -> bool {
        self.target[state]
    }

    pub fn is_avoid(&self, state: usize) -> bool {
        self.avoid[state]
    }

    /// The fully observable MDP underneath a POMDP, labelled by `spec`.
    pub fn from_pomdp(pomdp: &Pomdp<T>, spec: &Specification<T>) -> Self {
        let mdp = pomdp.mdp();
        let mut sparse = SparseMdp::with_states(mdp.num_states());
        sparse.initial = mdp.initial_state();
        for s in 0..mdp.num_states() {
            sparse.target[s] = spec.is_target(s);
            sparse.avoid[s] = spec.is_avoid(s);
            for choice in mdp.choices(s) {
                sparse.rows[s].push(Row {
                    action: choice.action,
                    entries: choice.distribution.clone(),
                    reward: spec.reward(s, choice.action),
                });
            }
        }
        sparse
    }

    pub(crate) fn to_float(&self) -> FloatMdp {
        let mut row_start = Vec::with_capacity(self.rows.len() + 1);
        let mut entry_start = vec![0];
        let mut column = Vec::new();
        let mut prob = Vec::new();
        let mut reward = Vec::new();
        let mut action = Vec::new();
        row_start.push(0);
        for state_rows in &self.rows {
            for row in state_rows {
                for (c, p) in &row.entries {
                    column.push(*c);
                    prob.push(p.to_f64());
                }
                entry_start.push(column.len());
                reward.push(row.reward.to_f64());
                action.push(row.action);
            }
            row_start.push(action.len());
        }
        FloatMdp {
            row_start,
            entry_start,
            column,
            prob,
            reward,
            action,
            initial: self.initial,
            target: self.target.clone(),
            avoid: self.avoid.clone(),
        }
    }
}

/// Flat float copy of a [`SparseMdp`] used by the solvers.
#[derive(Clone, Debug)]
pub(crate) struct FloatMdp {
    pub row_start: Vec<usize>,
    pub entry_start: Vec<usize>,
    pub column: Vec<usize>,
    pub prob: Vec<f64>,
    pub reward: Vec<f64>,
    pub action: Vec<usize>,
    pub initial: usize,
    pub target: Vec<bool>,
    pub avoid: Vec<bool>,
}

impl FloatMdp {
    pub fn num_states(&self) -> usize {
        self.row_start.len() - 1
    }

    pub fn rows(&self, state: usize) -> std::ops::Range<usize> {
        self.row_start[state]..self.row_start[state + 1]
    }

    pub fn entries(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.entry_start[row]..self.entry_start[row + 1];
        self.column[range.clone()]
            .iter()
            .copied()
            .zip(self.prob[range].iter().copied())
    }

    pub fn successors(&self, row: usize) -> &[usize] {
        &self.column[self.entry_start[row]..self.entry_start[row + 1]]
    }

    pub fn dot(&self, row: usize, values: &[f64]) -> f64 {
        self.entries(row).map(|(c, p)| p * values[c]).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn row_sum_enforced() {
        let mut mdp = SparseMdp::<Rational>::with_states(2);
        let half = Rational::from_ratio(1, 2);
        assert!(mdp
            .add_row(0, 0, [(1, half.clone())], Rational::zero())
            .is_err());
        assert!(mdp
            .add_row(0, 0, [(1, half.clone()), (1, half)], Rational::zero())
            .is_ok());
        assert_eq!(mdp.rows(0)[0].entries, vec![(1, Rational::one())]);
    }

    #[test]
    fn float_copy_keeps_layout() {
        let mut mdp = SparseMdp::<f64>::with_states(2);
        mdp.add_row(0, 0, [(0, 0.5), (1, 0.5)], 0.0).unwrap();
        mdp.add_row(0, 1, [(1, 1.0)], 2.0).unwrap();
        mdp.add_row(1, 0, [(1, 1.0)], 0.0).unwrap();
        let f = mdp.to_float();
        assert_eq!(f.rows(0), 0..2);
        assert_eq!(f.successors(0), &[0, 1]);
        assert_eq!(f.reward[1], 2.0);
        assert_eq!(f.dot(0, &[1.0, 3.0]), 2.0);
    }
}

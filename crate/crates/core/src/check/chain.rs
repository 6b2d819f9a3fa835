use super::graph::{self, Predecessors};
use super::ivi::{check_with, CheckOptions};
use super::sparse::SparseMdp;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{Direction, ObjectiveKind};
use crate::scalar::Scalar;

/// Values of a Markov chain; `exact` is filled in rational mode, where
/// `None` marks an infinite expected reward.
#[derive(Clone, Debug)]
pub struct ChainValues<T> {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub exact: Option<Vec<Option<T>>>,
}

/// Evaluates a chain given as a [`SparseMdp`] with one row per state.
///
/// Randomised policies are expressed by mixing rows before the call.
pub fn evaluate_markov_chain<T: Scalar>(
    chain: &SparseMdp<T>,
    kind: ObjectiveKind,
) -> Result<ChainValues<T>> {
    for s in 0..chain.num_states() {
        let rows = chain.rows(s).len();
        if rows > 1 || (rows == 0 && !chain.is_target(s) && !chain.is_avoid(s)) {
            return Err(Error::MalformedMatrix(format!(
                "chain state {s} has {rows} rows"
            )));
        }
    }
    if T::EXACT {
        let exact = solve_exact(chain, kind);
        let to_f64 = |v: &Option<T>| v.as_ref().map_or(f64::INFINITY, Scalar::to_f64);
        let values: Vec<f64> = exact.iter().map(to_f64).collect();
        return Ok(ChainValues {
            lower: values.clone(),
            upper: values,
            exact: Some(exact),
        });
    }
    let options = CheckOptions {
        precision: 1e-9,
        all_states: true,
        ..CheckOptions::default()
    };
    let result = check_with(chain, kind, Direction::Max, &options)?;
    Ok(ChainValues {
        lower: result.lower,
        upper: result.upper,
        exact: None,
    })
}

fn solve_exact<T: Scalar>(chain: &SparseMdp<T>, kind: ObjectiveKind) -> Vec<Option<T>> {
    let n = chain.num_states();
    let float = chain.to_float();
    let pre = Predecessors::new(&float);
    let probability = kind.is_probability();
    let mut values: Vec<Option<T>> = vec![Some(T::zero()); n];
    let mut unknown = Vec::new();
    if probability {
        let zero = graph::prob0a(&float, &pre);
        for s in 0..n {
            if chain.is_target(s) {
                values[s] = Some(T::one());
            } else if !(chain.is_avoid(s) || zero[s]) {
                unknown.push(s);
            }
        }
    } else {
        let sure = graph::prob1a(&float, &pre);
        for s in 0..n {
            if chain.is_target(s) {
                continue;
            }
            if sure[s] {
                unknown.push(s);
            } else {
                values[s] = None;
            }
        }
    }
    let mut index = vec![usize::MAX; n];
    for (i, &s) in unknown.iter().enumerate() {
        index[s] = i;
    }
    let k = unknown.len();
    let mut a = vec![vec![T::zero(); k]; k];
    let mut b = vec![T::zero(); k];
    for (i, &s) in unknown.iter().enumerate() {
        a[i][i] = T::one();
        let row = &chain.rows(s)[0];
        if !probability {
            b[i] = row.reward.clone();
        }
        for (c, p) in &row.entries {
            if index[*c] != usize::MAX {
                a[i][index[*c]] = a[i][index[*c]].clone() - p.clone();
            } else if let Some(v) = &values[*c] {
                b[i] = b[i].clone() + p.clone() * v.clone();
            }
        }
    }
    // Pinning the qualitative sets makes the system nonsingular.
    let x = linalg::solve(a, b).expect("chain system is nonsingular after pinning");
    for (i, &s) in unknown.iter().enumerate() {
        values[s] = Some(x[i].clone());
    }
    values
}

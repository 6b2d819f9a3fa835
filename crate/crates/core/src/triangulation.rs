//! Freudenthal triangulation of observation-local belief simplices.

use std::collections::BTreeMap;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::belief::Belief;
use crate::linalg;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Static,
    Dynamic,
}

/// Grid vertices containing a belief in their convex hull, with weights.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangulationResult<T> {
    pub neighbours: Vec<Belief<T>>,
    pub weights: Vec<T>,
}

impl<T: Scalar> TriangulationResult<T> {
    pub fn single(b: Belief<T>) -> Self {
        TriangulationResult {
            neighbours: vec![b],
            weights: vec![T::one()],
        }
    }

    pub fn len(&self) -> usize {
        self.neighbours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbours.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Belief<T>, &T)> + '_ {
        self.neighbours.iter().zip(self.weights.iter())
    }
}

/// Per-observation resolutions defining the discrete belief grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Foundation<T> {
    resolutions: Vec<u64>,
    versions: Vec<u32>,
    pub scheme: Scheme,
    pub init_resolution: u64,
    pub growth: f64,
    /// Hand-picked vertices per observation; Dirac beliefs are implicit.
    explicit: Option<BTreeMap<usize, Vec<Belief<T>>>>,
}

impl<T: Scalar> Foundation<T> {
    pub fn new(num_observations: usize, init_resolution: u64, growth: f64, scheme: Scheme) -> Self {
        assert!(init_resolution >= 1, "resolutions are positive");
        Foundation {
            resolutions: vec![init_resolution; num_observations],
            versions: vec![0; num_observations],
            scheme,
            init_resolution,
            growth,
            explicit: None,
        }
    }

    /// A fixed foundation made of the Dirac beliefs plus `points`.
    /// Neighbourhoods come from [`vertex_weights_solve`].
    pub fn explicit(num_observations: usize, points: Vec<Belief<T>>) -> Self {
        let mut by_obs: BTreeMap<usize, Vec<Belief<T>>> = BTreeMap::new();
        for p in points {
            by_obs.entry(p.obs()).or_default().push(p);
        }
        Foundation {
            resolutions: vec![1; num_observations],
            versions: vec![0; num_observations],
            scheme: Scheme::Static,
            init_resolution: 1,
            growth: 1.0,
            explicit: Some(by_obs),
        }
    }

    pub fn is_explicit(&self) -> bool {
        self.explicit.is_some()
    }

    pub fn resolution(&self, z: usize) -> u64 {
        self.resolutions[z]
    }

    pub fn resolutions(&self) -> &[u64] {
        &self.resolutions
    }

    pub fn max_resolution(&self) -> u64 {
        self.resolutions.iter().copied().max().unwrap_or(1)
    }

    /// Bumped every time `z`'s resolution changes.
    pub fn version(&self, z: usize) -> u32 {
        self.versions[z]
    }

    pub fn set_resolution(&mut self, z: usize, eta: u64) {
        assert!(eta >= self.resolutions[z], "resolutions never decrease");
        if eta != self.resolutions[z] {
            self.resolutions[z] = eta;
            self.versions[z] += 1;
        }
    }

    pub fn neighbourhood(&self, b: &Belief<T>) -> TriangulationResult<T> {
        if let Some(points) = &self.explicit {
            let mut candidates: Vec<Belief<T>> = b
                .support()
                .iter()
                .map(|&s| Belief::dirac(b.obs(), s))
                .collect();
            if let Some(extra) = points.get(&b.obs()) {
                candidates.extend(extra.iter().cloned());
            }
            let weights = vertex_weights_solve(b, &candidates)
                .expect("Dirac vertices always contain the belief");
            let (neighbours, weights) = candidates
                .into_iter()
                .zip(weights)
                .filter(|(_, w)| !w.is_zero())
                .unzip();
            return TriangulationResult {
                neighbours,
                weights,
            };
        }
        let eta = self.resolutions[b.obs()];
        match self.scheme {
            Scheme::Static => freudenthal_neighbourhood(b, eta),
            Scheme::Dynamic => dynamic_neighbourhood(b, eta).1,
        }
    }
}

fn is_grid_point<T: Scalar>(b: &Belief<T>, eta: &T) -> bool {
    b.probs().iter().all(|p| {
        let x = (p.clone() * eta.clone()).snap_integer();
        x.floor() == x
    })
}

/// Freudenthal neighbourhood of `b` at resolution `eta`.
pub fn freudenthal_neighbourhood<T: Scalar>(b: &Belief<T>, eta: u64) -> TriangulationResult<T> {
    assert!(eta >= 1, "resolution must be positive");
    let n = b.len();
    let eta_t = T::from_int(eta as i64);
    if n <= 1 || is_grid_point(b, &eta_t) {
        return TriangulationResult::single(b.clone());
    }
    // Cumulative coordinates x_i = η · Σ_{j ≥ i} b_j, with x_0 = η.
    let mut x = vec![T::zero(); n];
    let mut acc = T::zero();
    for i in (1..n).rev() {
        acc = acc + b.probs()[i].clone();
        x[i] = (acc.clone() * eta_t.clone()).snap_integer();
    }
    x[0] = eta_t.clone();
    let v: Vec<T> = x.iter().map(Scalar::floor).collect();
    let d: Vec<T> = x
        .iter()
        .zip(&v)
        .map(|(a, f)| a.clone() - f.clone())
        .collect();
    let mut order: Vec<usize> = (1..n).collect();
    // Stable sort keeps ascending positions among equal fractional parts.
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).expect("comparable"));

    let mut neighbours = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut u = v.clone();
    for k in 0..n {
        let weight = if k == 0 {
            T::one() - d[order[0]].clone()
        } else if k == n - 1 {
            d[order[n - 2]].clone()
        } else {
            d[order[k - 1]].clone() - d[order[k]].clone()
        };
        if k > 0 {
            let pos = order[k - 1];
            u[pos] = u[pos].clone() + T::one();
        }
        if weight.is_zero() || weight.is_negligible() {
            continue;
        }
        let entries = (0..n).map(|i| {
            let next = if i + 1 < n {
                u[i + 1].clone()
            } else {
                T::zero()
            };
            (b.support()[i], (u[i].clone() - next) / eta_t.clone())
        });
        neighbours.push(Belief::new(b.obs(), entries));
        weights.push(weight);
    }
    if !T::EXACT {
        let total = weights.iter().fold(T::zero(), |a, w| a + w.clone());
        for w in &mut weights {
            *w = w.clone() / total.clone();
        }
    }
    TriangulationResult {
        neighbours,
        weights,
    }
}

fn squared_norm<T: Scalar>(b: &Belief<T>) -> T {
    b.probs()
        .iter()
        .fold(T::zero(), |acc, p| acc + p.clone() * p.clone())
}

/// Convex weights expressing `b` over `candidates`, or `None` if `b` lies
/// outside their hull.
///
/// Among all feasible vertex subsets the one minimising `Σ μ_k ‖v_k‖²` is
/// chosen, which picks the Delaunay cell of the lifted points.
pub fn vertex_weights_solve<T: Scalar>(b: &Belief<T>, candidates: &[Belief<T>]) -> Option<Vec<T>> {
    let inside: Vec<usize> = (0..candidates.len())
        .filter(|&k| {
            candidates[k].obs() == b.obs()
                && candidates[k]
                    .support()
                    .iter()
                    .all(|s| b.support().binary_search(s).is_ok())
        })
        .collect();
    let n = b.len();
    let mut best: Option<(T, Vec<usize>, Vec<T>)> = None;
    for size in 1..=n.min(inside.len()) {
        for subset in inside.iter().copied().combinations(size) {
            let mut a: Vec<Vec<T>> = b
                .support()
                .iter()
                .map(|&s| subset.iter().map(|&k| candidates[k].get(s)).collect())
                .collect();
            a.push(vec![T::one(); size]);
            let mut rhs: Vec<T> = b.probs().to_vec();
            rhs.push(T::one());
            let Some(mu) = linalg::solve(a, rhs) else {
                continue;
            };
            let feasible = mu.iter().all(|m| {
                if T::EXACT {
                    *m >= T::zero()
                } else {
                    m.to_f64() >= -1e-12
                }
            });
            if !feasible {
                continue;
            }
            let mu: Vec<T> = mu
                .into_iter()
                .map(|m| if m < T::zero() { T::zero() } else { m })
                .collect();
            let objective = subset.iter().zip(&mu).fold(T::zero(), |acc, (&k, m)| {
                acc + m.clone() * squared_norm(&candidates[k])
            });
            let better = match &best {
                None => true,
                Some((current, _, _)) => objective < *current,
            };
            if better {
                best = Some((objective, subset, mu));
            }
        }
    }
    let (_, subset, mu) = best?;
    let mut weights = vec![T::zero(); candidates.len()];
    for (k, m) in subset.into_iter().zip(mu) {
        weights[k] = m;
    }
    Some(weights)
}

/// Picks the largest `η ≤ max_eta` whose neighbourhood is smallest.
pub fn dynamic_neighbourhood<T: Scalar>(
    b: &Belief<T>,
    max_eta: u64,
) -> (u64, TriangulationResult<T>) {
    let mut best: Option<(u64, TriangulationResult<T>)> = None;
    for eta in 1..=max_eta {
        let tri = freudenthal_neighbourhood(b, eta);
        let take = match &best {
            None => true,
            Some((_, current)) => tri.len() <= current.len(),
        };
        if take {
            best = Some((eta, tri));
        }
    }
    best.expect("max_eta >= 1")
}

/// How well `b` is approximated: 1 at a vertex, 0 when all weights are 1/n.
pub fn score_belief<T: Scalar>(b: &Belief<T>, tri: &TriangulationResult<T>) -> f64 {
    let n = b.len();
    if n <= 1 {
        return 1.0;
    }
    let n_f = n as f64;
    tri.weights
        .iter()
        .map(|w| (n_f * w.to_f64() - 1.0) / (n_f - 1.0))
        .fold(f64::NEG_INFINITY, f64::max)
        .clamp(0.0, 1.0)
}

/// Minimum belief score among `beliefs` (all observing `z`), scaled by
/// `η_z / max η`. Observations never triangulated score 1.
pub fn score_observation<T: Scalar>(
    z: usize,
    beliefs: &[Belief<T>],
    foundation: &Foundation<T>,
) -> f64 {
    if beliefs.is_empty() {
        return 1.0;
    }
    let worst = beliefs
        .iter()
        .map(|b| score_belief(b, &foundation.neighbourhood(b)))
        .fold(f64::INFINITY, f64::min);
    worst * foundation.resolution(z) as f64 / foundation.max_resolution() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct Extension {
    pub extended: Vec<usize>,
    pub next_rho_z: f64,
}

/// Raises `η_z ← ⌈η_z · f_R⌉` for every observation scoring at most
/// `rho_z`, then moves `rho_z` towards 1 by the factor `f_z`.
pub fn extend_foundation<T: Scalar>(
    foundation: &mut Foundation<T>,
    scores: &BTreeMap<usize, f64>,
    rho_z: f64,
    f_z: f64,
) -> Extension {
    let mut extended = Vec::new();
    if !foundation.is_explicit() {
        for (&z, &score) in scores {
            if score <= rho_z {
                let eta = foundation.resolution(z);
                let raised = ((eta as f64) * foundation.growth).ceil() as u64;
                foundation.set_resolution(z, raised.max(eta + 1));
                extended.push(z);
            }
        }
    }
    Extension {
        extended,
        next_rho_z: rho_z + f_z * (1.0 - rho_z),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn belief(entries: &[(usize, Rational)]) -> Belief<Rational> {
        Belief::new(0, entries.iter().cloned())
    }

    #[test]
    fn two_state_example() {
        let b = belief(&[(3, q(2, 3)), (4, q(1, 3))]);
        let tri = freudenthal_neighbourhood(&b, 2);
        assert_eq!(
            tri.neighbours,
            vec![
                belief(&[(3, q(1, 1))]),
                belief(&[(3, q(1, 2)), (4, q(1, 2))])
            ]
        );
        assert_eq!(tri.weights, vec![q(1, 3), q(2, 3)]);
        assert!((score_belief(&b, &tri) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn grid_point_is_its_own_neighbourhood() {
        let b = belief(&[(0, q(1, 2)), (1, q(1, 2))]);
        assert_eq!(
            freudenthal_neighbourhood(&b, 4),
            TriangulationResult::single(b.clone())
        );
        let (eta, tri) = dynamic_neighbourhood(&b, 12);
        assert_eq!((eta, tri.len()), (12, 1));
    }

    #[test]
    fn interior_point_dynamic_prefers_largest() {
        let b = belief(&[(1, q(49, 100)), (2, q(51, 100))]);
        let (eta, tri) = dynamic_neighbourhood(&b, 3);
        assert_eq!((eta, tri.len()), (3, 2));
    }

    #[test]
    fn three_state_reconstruction() {
        let b = belief(&[(0, q(1, 2)), (5, q(1, 6)), (6, q(1, 3))]);
        for eta in 1..=8 {
            let tri = freudenthal_neighbourhood(&b, eta);
            let mut sum = vec![q(0, 1); 3];
            for (v, w) in tri.iter() {
                for (i, s) in [0, 5, 6].iter().enumerate() {
                    sum[i] = sum[i].clone() + w.clone() * v.get(*s);
                }
            }
            assert_eq!(sum, vec![q(1, 2), q(1, 6), q(1, 3)]);
            let solved = vertex_weights_solve(&b, &tri.neighbours).unwrap();
            assert_eq!(solved, tri.weights);
        }
    }

    #[test]
    fn explicit_weights() {
        let b = Belief::new(0, [(0, q(1, 2)), (5, q(1, 6)), (6, q(1, 3))]);
        let cands = vec![
            Belief::dirac(0, 0),
            Belief::dirac(0, 5),
            Belief::new(0, [(5, q(1, 4)), (6, q(3, 4))]),
        ];
        assert_eq!(
            vertex_weights_solve(&b, &cands).unwrap(),
            vec![q(1, 2), q(1, 18), q(4, 9)]
        );
        assert!(
            vertex_weights_solve(&Belief::<Rational>::dirac(0, 1), &[Belief::dirac(0, 2)])
                .is_none()
        );
    }

    #[test]
    fn extension_schedule() {
        let mut f = Foundation::<Rational>::new(3, 3, 2.0, Scheme::Static);
        let scores = BTreeMap::from([(1, 0.05), (2, 0.9)]);
        let ext = extend_foundation(&mut f, &scores, 0.1, 0.1);
        assert_eq!(ext.extended, vec![1]);
        assert_eq!(f.resolutions(), &[3, 6, 3]);
        assert_eq!((f.version(1), f.version(2)), (1, 0));
        assert!((ext.next_rho_z - 0.19).abs() < 1e-12);
        let ext = extend_foundation(&mut f, &BTreeMap::new(), ext.next_rho_z, 0.1);
        assert!((ext.next_rho_z - 0.271).abs() < 1e-12);
    }

    #[test]
    fn observation_score_scaling() {
        let mut f = Foundation::<Rational>::new(2, 3, 2.0, Scheme::Static);
        f.set_resolution(1, 6);
        let b = Belief::new(0, [(3, q(2, 3)), (4, q(1, 3))]);
        let mut g = Foundation::<Rational>::new(2, 2, 2.0, Scheme::Static);
        g.set_resolution(1, 4);
        // score 1/3 at η=2, scaled by 2/4.
        assert!((score_observation(0, &[b], &g) - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(score_observation::<Rational>(0, &[], &f), 1.0);
    }
}

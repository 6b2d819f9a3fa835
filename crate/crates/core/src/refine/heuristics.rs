use serde::{Deserialize, Serialize};

use crate::check::relative_gap;
use crate::scalar::Scalar;
use crate::triangulation::{Foundation, Scheme};

/// Parameters steering foundation growth and the explore/rewire gates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    pub name: String,
    pub eta_init: u64,
    pub f_r: f64,
    pub rho_z: f64,
    pub f_z: f64,
    pub f_step: f64,
    pub rho_gap: f64,
    pub f_gap: f64,
    pub rho_sigma: f64,
    pub scheme: Scheme,
}

pub const PRESET_NAMES: [&str; 6] = ["h0", "h1", "h2", "h3", "h4", "h5"];

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            name: "h0".into(),
            eta_init: 3,
            f_r: 2.0,
            rho_z: 0.1,
            f_z: 0.1,
            f_step: 4.0,
            rho_gap: 0.1,
            f_gap: 0.25,
            rho_sigma: 0.001,
            scheme: Scheme::Static,
        }
    }
}

impl HeuristicConfig {
    pub fn preset(name: &str) -> Option<Self> {
        let mut config = HeuristicConfig {
            name: name.to_string(),
            ..HeuristicConfig::default()
        };
        match name {
            "h0" => {}
            "h1" => config.f_r = std::f64::consts::SQRT_2,
            "h2" => config.f_z = 0.05,
            "h3" => config.f_step = 2.0,
            "h4" => config.f_gap = 0.5,
            "h5" => config.rho_sigma = 0.5,
            _ => return None,
        }
        Some(config)
    }

    pub fn foundation<T: Scalar>(&self, num_observations: usize) -> Foundation<T> {
        Foundation::new(num_observations, self.eta_init, self.f_r, self.scheme)
    }
}

/// Whether a newly discovered belief is worth exploring: its bounds are
/// still far apart, the per-iteration step budget is not used up and the
/// belief was reachable under a near-optimal policy last time.
pub fn explore_gate(
    lower: f64,
    upper: f64,
    processed: usize,
    reachable: bool,
    rho_gap: f64,
    rho_step: f64,
) -> bool {
    relative_gap(lower, upper) > rho_gap && (processed as f64) < rho_step && reachable
}

/// Whether `(b, α)` should be recomputed: the explore criteria hold, `α` is
/// near-optimal at `b` and some successor observation got a finer grid.
pub fn rewire_gate<T: Scalar>(
    explore_criteria: bool,
    action: usize,
    optimal_actions: Option<&[usize]>,
    wired_versions: &[(usize, u32)],
    foundation: &Foundation<T>,
) -> bool {
    let selected = optimal_actions.is_none_or(|acts| acts.contains(&action));
    let changed = wired_versions
        .iter()
        .any(|&(z, v)| foundation.version(z) != v);
    explore_criteria && selected && changed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn gates() {
        assert!(!explore_gate(0.5, 0.5, 0, true, 0.1, f64::INFINITY));
        assert!(explore_gate(0.2, 0.5, 0, true, 0.1, f64::INFINITY));
        assert!(!explore_gate(0.2, 0.5, 10, true, 0.1, 10.0));
        assert!(!explore_gate(0.2, 0.5, 0, false, 0.1, f64::INFINITY));

        let mut f = Foundation::<Rational>::new(2, 3, 2.0, Scheme::Static);
        let wired = [(1, 0)];
        assert!(!rewire_gate(true, 0, None, &wired, &f));
        f.set_resolution(1, 6);
        assert!(rewire_gate(true, 0, None, &wired, &f));
        assert!(!rewire_gate(true, 0, Some(&[1]), &wired, &f));
        assert!(!rewire_gate(false, 0, None, &wired, &f));
    }
}

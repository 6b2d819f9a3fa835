//! Small parametric benchmark families.
//!
//! These are desk-scale grid worlds in the spirit of the usual POMDP
//! benchmarks; they are not copies of any published model files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{serialize_model, Direction, Mdp, ObjectiveKind, Pomdp, Specification};
use crate::scalar::{Rational, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    GridAvoid,
    MazeLike,
    RefuelLite,
    RocksLite,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::GridAvoid,
        Family::MazeLike,
        Family::RefuelLite,
        Family::RocksLite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::GridAvoid => "grid-avoid",
            Family::MazeLike => "maze-like",
            Family::RefuelLite => "refuel-lite",
            Family::RocksLite => "rocks-lite",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown benchmark family `{s}`")))
    }
}

/// Size and noise parameters. `width`/`height` size the grid (for the
/// one-dimensional families only `width` is used); `noise` is the slip or
/// sensor-error probability; `resources` is the fuel capacity or the
/// number of rocks.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams {
    pub width: usize,
    pub height: usize,
    pub noise: Rational,
    pub resources: usize,
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            width: 3,
            height: 3,
            noise: Rational::from_ratio(1, 10),
            resources: 2,
            seed: 0,
        }
    }
}

type Row = (usize, Vec<(usize, Rational)>);

/// Collects rows and observations before validation.
struct Draft {
    actions: Vec<String>,
    rows: Vec<Vec<Row>>,
    obs: Vec<usize>,
    num_obs: usize,
}

impl Draft {
    fn new(actions: &[&str], num_states: usize) -> Self {
        Draft {
            actions: actions.iter().map(|a| a.to_string()).collect(),
            rows: vec![Vec::new(); num_states],
            obs: vec![0; num_states],
            num_obs: 0,
        }
    }

    fn row(&mut self, s: usize, action: usize, dist: Vec<(usize, Rational)>) {
        self.rows[s].push((action, dist));
    }

    fn absorbing(&mut self, s: usize) {
        for a in 0..self.actions.len() {
            self.row(s, a, vec![(s, Rational::one())]);
        }
    }

    /// Assigns dense observation ids in order of first appearance.
    fn observe<K: Ord + Clone>(&mut self, keys: &[K]) {
        let mut ids = BTreeMap::new();
        let mut order = Vec::new();
        for k in keys {
            if !ids.contains_key(k) {
                ids.insert(k.clone(), order.len());
                order.push(k.clone());
            }
        }
        self.obs = keys.iter().map(|k| ids[k]).collect();
        self.num_obs = order.len();
    }

    fn finish(self, initial: usize, spec: &Specification<Rational>) -> Result<String> {
        let mdp = Mdp::new(self.actions, initial, self.rows)?;
        let pomdp = Pomdp::new(mdp, self.num_obs, self.obs)?;
        spec.validate(&pomdp)?;
        Ok(serialize_model(&pomdp, spec))
    }
}

/// Movement with slip: the intended cell with `1 - slip`, staying put
/// otherwise.
fn slip_move(from: usize, to: usize, slip: &Rational) -> Vec<(usize, Rational)> {
    if from == to || slip.is_zero() {
        return vec![(to, Rational::one())];
    }
    vec![(to, Rational::one() - slip.clone()), (from, slip.clone())]
}

fn check_params(p: &GeneratorParams) -> Result<()> {
    if p.width == 0 || p.height == 0 {
        return Err(Error::Config("sizes must be positive".into()));
    }
    if p.noise < Rational::zero() || p.noise >= Rational::one() {
        return Err(Error::Config("noise must lie in [0, 1)".into()));
    }
    Ok(())
}

/// Writes the model text for `family`. Identical inputs give identical
/// bytes.
pub fn generate(family: Family, params: &GeneratorParams) -> Result<String> {
    check_params(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    match family {
        Family::GridAvoid => grid_avoid(params, &mut rng),
        Family::MazeLike => maze_like(params, &mut rng),
        Family::RefuelLite => refuel_lite(params, &mut rng),
        Family::RocksLite => rocks_lite(params, &mut rng),
    }
}

const MOVES: [&str; 4] = ["north", "east", "south", "west"];

fn step(w: usize, h: usize, x: usize, y: usize, dir: usize) -> (usize, usize) {
    match dir {
        0 if y + 1 < h => (x, y + 1),
        1 if x + 1 < w => (x + 1, y),
        2 if y > 0 => (x, y - 1),
        3 if x > 0 => (x - 1, y),
        _ => (x, y),
    }
}

/// Reach the far corner of a grid while avoiding randomly placed traps.
/// The start cell is unknown within the first column and the agent only
/// observes how many walls surround it.
fn grid_avoid(p: &GeneratorParams, rng: &mut ChaCha8Rng) -> Result<String> {
    let (w, h) = (p.width, p.height);
    let cells = w * h;
    let cell = |x: usize, y: usize| y * w + x;
    let goal = cell(w - 1, h - 1);
    let starts: Vec<usize> = (0..h).map(|y| cell(0, y)).filter(|&c| c != goal).collect();
    let mut free: Vec<usize> = (0..cells)
        .filter(|c| *c != goal && !starts.contains(c))
        .collect();
    free.shuffle(rng);
    let traps: BTreeSet<usize> = free.into_iter().take(cells / 6).collect();

    // One extra state scatters the agent over the start column.
    let init = cells;
    let mut d = Draft::new(&MOVES, cells + 1);
    for y in 0..h {
        for x in 0..w {
            let c = cell(x, y);
            if c == goal || traps.contains(&c) {
                d.absorbing(c);
                continue;
            }
            for dir in 0..4 {
                // A slip sends the agent in a uniformly random direction;
                // duplicate targets are merged by `Mdp::new`.
                let quarter = p.noise.clone() * Rational::from_ratio(1, 4);
                let mut dist = Vec::with_capacity(5);
                let (nx, ny) = step(w, h, x, y, dir);
                dist.push((cell(nx, ny), Rational::one() - p.noise.clone()));
                if !p.noise.is_zero() {
                    for other in 0..4 {
                        let (ox, oy) = step(w, h, x, y, other);
                        dist.push((cell(ox, oy), quarter.clone()));
                    }
                }
                d.row(c, dir, dist);
            }
        }
    }
    let scatter: Vec<(usize, Rational)> = if starts.is_empty() {
        vec![(goal, Rational::one())]
    } else {
        let share = Rational::from_ratio(1, starts.len() as i64);
        starts.iter().map(|&c| (c, share.clone())).collect()
    };
    for a in 0..4 {
        d.row(init, a, scatter.clone());
    }
    let keys: Vec<(u8, usize)> = (0..=cells)
        .map(|c| {
            if c == init {
                (0, 0)
            } else if c == goal {
                (1, 0)
            } else if traps.contains(&c) {
                (2, 0)
            } else {
                let (x, y) = (c % w, c / w);
                let walls = [x == 0, x + 1 == w, y == 0, y + 1 == h]
                    .iter()
                    .filter(|&&b| b)
                    .count();
                (3, walls)
            }
        })
        .collect();
    d.observe(&keys);
    let mut spec = Specification::reach(Direction::Max, [goal]);
    spec.kind = ObjectiveKind::ReachAvoidProbability;
    spec.avoid = traps;
    let initial = if cells == 1 { goal } else { init };
    d.finish(initial, &spec)
}

/// Minimise the expected number of steps to the exit of a random perfect
/// maze. Cells are observed only through their wall pattern.
fn maze_like(p: &GeneratorParams, rng: &mut ChaCha8Rng) -> Result<String> {
    let (w, h) = (p.width, p.height);
    let cells = w * h;
    let cell = |x: usize, y: usize| y * w + x;
    // open[c][dir]: passage from c in direction dir.
    let mut open = vec![[false; 4]; cells];
    let mut seen = vec![false; cells];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(&c) = stack.last() {
        let (x, y) = (c % w, c / w);
        let fresh: Vec<usize> = (0..4)
            .filter(|&dir| {
                let (nx, ny) = step(w, h, x, y, dir);
                (nx, ny) != (x, y) && !seen[cell(nx, ny)]
            })
            .collect();
        match fresh.choose(rng) {
            Some(&dir) => {
                let (nx, ny) = step(w, h, x, y, dir);
                let n = cell(nx, ny);
                open[c][dir] = true;
                open[n][(dir + 2) % 4] = true;
                seen[n] = true;
                stack.push(n);
            }
            None => {
                stack.pop();
            }
        }
    }
    let goal = rng.gen_range(0..cells);
    let init = cells;
    let mut d = Draft::new(&MOVES, cells + 1);
    let mut spec = Specification::reach(Direction::Min, [goal]);
    spec.kind = ObjectiveKind::ExpectedTotalReward;
    for c in 0..cells {
        if c == goal {
            d.absorbing(c);
            continue;
        }
        let (x, y) = (c % w, c / w);
        for dir in 0..4 {
            let to = if open[c][dir] {
                let (nx, ny) = step(w, h, x, y, dir);
                cell(nx, ny)
            } else {
                c
            };
            d.row(c, dir, slip_move(c, to, &p.noise));
            spec.rewards.insert((c, dir), Rational::one());
        }
    }
    let others: Vec<usize> = (0..cells).filter(|&c| c != goal).collect();
    let scatter: Vec<(usize, Rational)> = if others.is_empty() {
        vec![(goal, Rational::one())]
    } else {
        let share = Rational::from_ratio(1, others.len() as i64);
        others.iter().map(|&c| (c, share.clone())).collect()
    };
    for a in 0..4 {
        d.row(init, a, scatter.clone());
    }
    let keys: Vec<(u8, [bool; 4])> = (0..=cells)
        .map(|c| match c {
            _ if c == init => (0, [false; 4]),
            _ if c == goal => (1, [false; 4]),
            _ => (2, open[c]),
        })
        .collect();
    d.observe(&keys);
    let initial = if cells == 1 { goal } else { init };
    d.finish(initial, &spec)
}

/// Drive along a road to its end. Every move burns one unit of fuel and
/// may slip; stations refill the tank. The driver sees the fuel gauge and
/// whether a station is nearby, not the position.
fn refuel_lite(p: &GeneratorParams, rng: &mut ChaCha8Rng) -> Result<String> {
    let n = p.width;
    let fuel = p.resources.max(1);
    let goal_pos = n - 1;
    // Stations every `fuel` cells keep the road passable; one more is
    // placed at random.
    let mut stations: BTreeSet<usize> = (0..goal_pos).step_by(fuel).collect();
    if goal_pos > 1 {
        stations.insert(rng.gen_range(1..goal_pos));
    }
    // States (pos, fuel) followed by goal and empty-tank sinks.
    let idx = |pos: usize, f: usize| pos * (fuel + 1) + f;
    let goal = n * (fuel + 1);
    let empty = goal + 1;
    let mut d = Draft::new(&["left", "right", "refuel"], empty + 1);
    for pos in 0..n {
        for f in 0..=fuel {
            let s = idx(pos, f);
            if pos == goal_pos {
                d.absorbing(s);
                continue;
            }
            for (a, delta) in [(0usize, -1i64), (1, 1)] {
                let target = (pos as i64 + delta).clamp(0, n as i64 - 1) as usize;
                let dist = if f == 0 {
                    vec![(empty, Rational::one())]
                } else {
                    let moved = if target == goal_pos {
                        goal
                    } else {
                        idx(target, f - 1)
                    };
                    let stayed = idx(pos, f - 1);
                    if target == pos || p.noise.is_zero() {
                        vec![(moved, Rational::one())]
                    } else {
                        vec![
                            (moved, Rational::one() - p.noise.clone()),
                            (stayed, p.noise.clone()),
                        ]
                    }
                };
                d.row(s, a, dist);
            }
            let refill = if stations.contains(&pos) { fuel } else { f };
            d.row(s, 2, vec![(idx(pos, refill), Rational::one())]);
        }
    }
    d.absorbing(goal);
    d.absorbing(empty);
    let keys: Vec<(u8, usize, bool)> = (0..=empty)
        .map(|s| {
            if s == goal || (s < goal && s / (fuel + 1) == goal_pos) {
                (1, 0, false)
            } else if s == empty {
                (2, 0, false)
            } else {
                (0, s % (fuel + 1), stations.contains(&(s / (fuel + 1))))
            }
        })
        .collect();
    d.observe(&keys);
    let mut targets: BTreeSet<usize> = (0..=fuel).map(|f| idx(goal_pos, f)).collect();
    targets.insert(goal);
    let mut spec = Specification::reach(Direction::Max, targets);
    spec.kind = ObjectiveKind::ReachAvoidProbability;
    spec.avoid.insert(empty);
    d.finish(idx(0, fuel), &spec)
}

/// A rover on a line must sample a good rock and then leave at the right
/// end. Rock qualities are hidden; a noisy long-range sensor helps.
fn rocks_lite(p: &GeneratorParams, rng: &mut ChaCha8Rng) -> Result<String> {
    let n = p.width;
    let k = p.resources.clamp(1, 4);
    let mut spots: Vec<usize> = (0..n).collect();
    spots.shuffle(rng);
    let mut rocks: Vec<usize> = spots.into_iter().take(k).collect();
    rocks.sort_unstable();
    let k = rocks.len();
    let configs = 1usize << k;
    // Per state: position, rock qualities, last reading (0 none, 1 good,
    // 2 bad), sampled flag. Then init, success and failure sinks.
    let idx = |pos: usize, q: usize, r: usize, done: bool| {
        ((pos * configs + q) * 3 + r) * 2 + usize::from(done)
    };
    let core = n * configs * 6;
    let (init, success, failure) = (core, core + 1, core + 2);
    let mut names = vec!["left".to_string(), "right".into(), "sample".into()];
    names.extend((0..k).map(|i| format!("check{i}")));
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut d = Draft::new(&name_refs, core + 3);
    let accuracy = Rational::one() - p.noise.clone();
    for pos in 0..n {
        for q in 0..configs {
            for r in 0..3 {
                for done in [false, true] {
                    let s = idx(pos, q, r, done);
                    let left = idx(pos.saturating_sub(1), q, 0, done);
                    d.row(s, 0, vec![(left, Rational::one())]);
                    let right = if pos + 1 == n {
                        if done {
                            success
                        } else {
                            failure
                        }
                    } else {
                        idx(pos + 1, q, 0, done)
                    };
                    d.row(s, 1, vec![(right, Rational::one())]);
                    let sample = match rocks.iter().position(|&x| x == pos) {
                        Some(i) if q >> i & 1 == 1 => idx(pos, q, 0, true),
                        Some(_) => failure,
                        None => s,
                    };
                    d.row(s, 2, vec![(sample, Rational::one())]);
                    for i in 0..k {
                        let good = q >> i & 1 == 1;
                        let (yes, no) = (idx(pos, q, 1, done), idx(pos, q, 2, done));
                        let (right_reading, wrong_reading) =
                            if good { (yes, no) } else { (no, yes) };
                        let dist = if p.noise.is_zero() {
                            vec![(right_reading, Rational::one())]
                        } else {
                            vec![
                                (right_reading, accuracy.clone()),
                                (wrong_reading, p.noise.clone()),
                            ]
                        };
                        d.row(s, 3 + i, dist);
                    }
                }
            }
        }
    }
    let share = Rational::from_ratio(1, configs as i64);
    let scatter: Vec<(usize, Rational)> = (0..configs)
        .map(|q| (idx(0, q, 0, false), share.clone()))
        .collect();
    for a in 0..names.len() {
        d.row(init, a, scatter.clone());
    }
    d.absorbing(success);
    d.absorbing(failure);
    let keys: Vec<(u8, usize, usize, bool)> = (0..core + 3)
        .map(|s| match s {
            _ if s == init => (0, 0, 0, false),
            _ if s == success => (1, 0, 0, false),
            _ if s == failure => (2, 0, 0, false),
            _ => {
                let done = s % 2 == 1;
                let r = (s / 2) % 3;
                let pos = s / 6 / configs;
                (3, pos, r, done)
            }
        })
        .collect();
    d.observe(&keys);
    let mut spec = Specification::reach(Direction::Max, [success]);
    spec.kind = ObjectiveKind::ReachAvoidProbability;
    spec.avoid.insert(failure);
    d.finish(init, &spec)
}

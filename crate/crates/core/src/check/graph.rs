//! Qualitative (graph-based) precomputations.
//!
//! Avoid states never count as reaching the target; they are treated as
//! absorbing losers everywhere below.

use std::collections::VecDeque;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::sparse::FloatMdp;

pub(crate) struct Predecessors {
    row_owner: Vec<usize>,
    /// For each state, the rows having it as a successor.
    rows_into: Vec<Vec<usize>>,
}

impl Predecessors {
    pub fn new(m: &FloatMdp) -> Self {
        let n = m.num_states();
        let mut row_owner = vec![0; m.action.len()];
        let mut rows_into = vec![Vec::new(); n];
        for s in 0..n {
            for r in m.rows(s) {
                row_owner[r] = s;
                for &c in m.successors(r) {
                    if rows_into[c].last() != Some(&r) {
                        rows_into[c].push(r);
                    }
                }
            }
        }
        Predecessors {
            row_owner,
            rows_into,
        }
    }
}

/// States whose maximal reachability probability is zero.
pub(crate) fn prob0a(m: &FloatMdp, pre: &Predecessors) -> Vec<bool> {
    let n = m.num_states();
    let mut reach = m.target.clone();
    let mut queue: VecDeque<usize> = (0..n).filter(|&s| reach[s]).collect();
    while let Some(x) = queue.pop_front() {
        for &r in &pre.rows_into[x] {
            let s = pre.row_owner[r];
            if !reach[s] && !m.avoid[s] {
                reach[s] = true;
                queue.push_back(s);
            }
        }
    }
    reach.into_iter().map(|r| !r).collect()
}

/// States where some policy avoids the target surely.
pub(crate) fn prob0e(m: &FloatMdp, pre: &Predecessors) -> Vec<bool> {
    let n = m.num_states();
    let mut reach = m.target.clone();
    let mut unhit: Vec<usize> = (0..n).map(|s| m.rows(s).len()).collect();
    let mut row_hit = vec![false; m.action.len()];
    let mut queue: VecDeque<usize> = (0..n).filter(|&s| reach[s]).collect();
    while let Some(x) = queue.pop_front() {
        for &r in &pre.rows_into[x] {
            if row_hit[r] {
                continue;
            }
            row_hit[r] = true;
            let s = pre.row_owner[r];
            unhit[s] -= 1;
            if unhit[s] == 0 && !reach[s] && !m.avoid[s] {
                reach[s] = true;
                queue.push_back(s);
            }
        }
    }
    reach.into_iter().map(|r| !r).collect()
}

/// States from which every policy reaches the target almost surely.
pub(crate) fn prob1a(m: &FloatMdp, pre: &Predecessors) -> Vec<bool> {
    let mut bad = prob0e(m, pre);
    let mut queue: VecDeque<usize> = (0..m.num_states()).filter(|&s| bad[s]).collect();
    while let Some(x) = queue.pop_front() {
        for &r in &pre.rows_into[x] {
            let s = pre.row_owner[r];
            if !bad[s] && !m.target[s] {
                bad[s] = true;
                queue.push_back(s);
            }
        }
    }
    bad.into_iter().map(|b| !b).collect()
}

/// States from which some policy reaches the target almost surely.
pub(crate) fn prob1e(m: &FloatMdp, pre: &Predecessors) -> Vec<bool> {
    let n = m.num_states();
    let mut inside: Vec<bool> = prob0a(m, pre).into_iter().map(|z| !z).collect();
    loop {
        let row_stays: Vec<bool> = (0..m.action.len())
            .map(|r| m.successors(r).iter().all(|&c| inside[c]))
            .collect();
        let mut reach = m.target.clone();
        let mut queue: VecDeque<usize> = (0..n).filter(|&s| reach[s]).collect();
        while let Some(x) = queue.pop_front() {
            for &r in &pre.rows_into[x] {
                let s = pre.row_owner[r];
                if row_stays[r] && inside[s] && !reach[s] && !m.avoid[s] {
                    reach[s] = true;
                    queue.push_back(s);
                }
            }
        }
        if reach == inside {
            return inside;
        }
        inside = reach;
    }
}

/// A maximal end component with the rows that leave it.
#[derive(Clone, Debug)]
pub(crate) struct EndComponent {
    pub states: Vec<usize>,
    pub exits: Vec<usize>,
}

/// Maximal end components of the sub-MDP induced by `candidate` states.
pub(crate) fn maximal_end_components(m: &FloatMdp, candidate: &[bool]) -> Vec<EndComponent> {
    let n = m.num_states();
    let mut remaining = candidate.to_vec();
    let mut allowed: Vec<bool> = vec![false; m.action.len()];
    for s in 0..n {
        if remaining[s] {
            for r in m.rows(s) {
                allowed[r] = m.successors(r).iter().all(|&c| remaining[c]);
            }
        }
    }
    let mut scc_of = vec![usize::MAX; n];
    loop {
        let mut graph: DiGraph<(), ()> = DiGraph::with_capacity(n, 0);
        for _ in 0..n {
            graph.add_node(());
        }
        for s in 0..n {
            if !remaining[s] {
                continue;
            }
            for r in m.rows(s) {
                if allowed[r] {
                    for &c in m.successors(r) {
                        graph.add_edge((s as u32).into(), (c as u32).into(), ());
                    }
                }
            }
        }
        scc_of.iter_mut().for_each(|x| *x = usize::MAX);
        for (i, component) in tarjan_scc(&graph).into_iter().enumerate() {
            for node in component {
                scc_of[node.index()] = i;
            }
        }
        let mut changed = false;
        for s in 0..n {
            if !remaining[s] {
                continue;
            }
            let mut any = false;
            for r in m.rows(s) {
                if allowed[r] {
                    let stays = m
                        .successors(r)
                        .iter()
                        .all(|&c| remaining[c] && scc_of[c] == scc_of[s]);
                    if stays {
                        any = true;
                    } else {
                        allowed[r] = false;
                        changed = true;
                    }
                }
            }
            if !any {
                remaining[s] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for s in 0..n {
        if remaining[s] {
            groups.entry(scc_of[s]).or_default().push(s);
        }
    }
    let mut components: Vec<EndComponent> = groups
        .into_values()
        .map(|states| {
            let exits = states
                .iter()
                .flat_map(|&s| m.rows(s))
                .filter(|&r| !allowed[r])
                .collect();
            EndComponent { states, exits }
        })
        .collect();
    components.sort_by_key(|c| c.states[0]);
    components
}

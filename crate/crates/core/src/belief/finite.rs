use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::model::Pomdp;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Finiteness {
    Finite,
    Unknown,
}

/// Sufficient check for a finite reachable belief MDP.
///
/// Beliefs in singleton observation classes are Dirac, so cycles through
/// them cannot create new beliefs; neither can absorbing states. Any other
/// cycle makes the answer `Unknown`.
pub fn finite_belief_check<T: Scalar>(pomdp: &Pomdp<T>) -> Finiteness {
    let mdp = pomdp.mdp();
    let n = mdp.num_states();
    let mut graph: DiGraph<(), ()> = DiGraph::with_capacity(n, 0);
    for _ in 0..n {
        graph.add_node(());
    }
    let mut self_loop = vec![false; n];
    for s in 0..n {
        for choice in mdp.choices(s) {
            for (t, _) in &choice.distribution {
                if *t == s {
                    self_loop[s] = true;
                }
                graph.add_edge((s as u32).into(), (*t as u32).into(), ());
            }
        }
    }
    let absorbing = |s: usize| {
        mdp.choices(s)
            .iter()
            .all(|c| c.distribution.len() == 1 && c.distribution[0].0 == s)
    };
    let singleton = |s: usize| pomdp.class(pomdp.observation(s)).len() == 1;
    for component in tarjan_scc(&graph) {
        let states: Vec<usize> = component.iter().map(|v| v.index()).collect();
        let cyclic = states.len() > 1 || self_loop[states[0]];
        if !cyclic {
            continue;
        }
        if states.len() == 1 && absorbing(states[0]) {
            continue;
        }
        if !states.iter().all(|&s| singleton(s)) {
            return Finiteness::Unknown;
        }
    }
    Finiteness::Finite
}

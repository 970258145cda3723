//! Branch and bound that re-colors the candidate set after every branch and
//! picks the next branching vertex on the fly: smallest color class first,
//! then largest degree inside the candidate set, then lowest index.

use std::time::Instant;

use super::bitset::Bits;
use super::search::{degree_descending_order, Reordered, Search};
use super::{Budget, RawOutcome};
use crate::graph::Graph;

pub(crate) fn run(g: &Graph, budget: &Budget, start: Instant) -> RawOutcome {
    let r = Reordered::new(g, degree_descending_order(g));
    let mut s = Search::new(&r.adj, budget, start);
    let mut clique = Vec::new();
    expand(&mut s, &mut clique, Bits::full(r.adj.len()));
    RawOutcome {
        clique: r.to_original(&s.best),
        exhausted: s.exhausted,
        nodes: s.nodes,
    }
}

fn expand(s: &mut Search<'_>, clique: &mut Vec<usize>, mut cand: Bits) {
    if !s.enter() {
        return;
    }
    loop {
        if cand.is_empty() {
            s.offer(clique);
            return;
        }
        let classes = s.color_classes(&cand);
        if clique.len() + classes.len() <= s.target() {
            return;
        }
        // Classes 1..=skip can contribute at most `skip` vertices, which
        // cannot beat the incumbent; an improving clique needs a vertex
        // from a later class.
        let skip = s.target().saturating_sub(clique.len());
        let v = classes[skip..]
            .iter()
            .flat_map(|class| class.iter().map(move |&v| (class.len(), v)))
            .min_by_key(|&(class_len, v)| {
                (class_len, std::cmp::Reverse(cand.and_count(&s.adj[v])), v)
            })
            .map(|(_, v)| v)
            .expect("non-empty branching set");
        clique.push(v);
        let next = cand.and(&s.adj[v]);
        expand(s, clique, next);
        clique.pop();
        if s.exhausted {
            return;
        }
        cand.remove(v);
    }
}

//! Branch and bound with a greedy-coloring upper bound recomputed for every
//! candidate set.

use std::time::Instant;

use super::bitset::Bits;
use super::search::{degree_descending_order, Reordered, Search};
use super::{Budget, RawOutcome};
use crate::graph::Graph;

pub(crate) fn run(g: &Graph, budget: &Budget, start: Instant) -> RawOutcome {
    let r = Reordered::new(g, degree_descending_order(g));
    let mut s = Search::new(&r.adj, budget, start);
    let mut clique = Vec::new();
    s.expand_colored(&mut clique, Bits::full(s.n()));
    RawOutcome {
        clique: r.to_original(&s.best),
        exhausted: s.exhausted,
        nodes: s.nodes,
    }
}

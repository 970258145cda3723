//! Degeneracy-driven search. Every clique has a unique earliest vertex in
//! the peeling order, and the rest of the clique lies among that vertex's
//! later neighbors (at most its core number of them). Vertices are visited
//! from the highest core down, each right-neighborhood is searched with a
//! coloring bound, and the run ends as soon as the incumbent reaches
//! `core + 1` of the next vertex (in particular `d + 1`). Only the
//! right-neighborhoods are materialized as bitsets, so the cost stays
//! near-linear on sparse graphs.

use std::time::Instant;

use super::bitset::Bits;
use super::search::Search;
use super::{Budget, RawOutcome};
use crate::graph::{core_decomposition, Graph};

pub(crate) fn run(g: &Graph, budget: &Budget, start: Instant) -> RawOutcome {
    let cores = core_decomposition(g);
    let bound = cores.degeneracy + 1;
    let n = g.node_count();
    let mut pos = vec![0; n];
    for (i, &v) in cores.peel_order.iter().enumerate() {
        pos[v] = i;
    }
    let mut best: Vec<usize> = Vec::new();
    let mut exhausted = false;
    let empty: Vec<Bits> = Vec::new();
    // Vertex-level budget accounting; the local searches below add their
    // own node counts.
    let mut outer = Search::new(&empty, budget, start);
    let mut visit: Vec<usize> = (0..n).collect();
    visit.sort_by_key(|&v| (std::cmp::Reverse(cores.core_number[v]), pos[v]));
    for v in visit {
        if best.len() >= bound || cores.core_number[v] < best.len() {
            break;
        }
        if !outer.enter() {
            exhausted = true;
            break;
        }
        let mut later: Vec<usize> = g
            .neighbors(v)
            .iter()
            .copied()
            .filter(|&w| pos[w] > pos[v])
            .collect();
        if later.len() + 1 <= best.len() {
            continue;
        }
        if later.is_empty() {
            best = vec![v];
            continue;
        }
        later.sort_by_key(|&w| pos[w]);
        let local = local_adjacency(g, &later);
        let mut s = Search::new(&local, budget, start);
        s.nodes = outer.nodes;
        s.floor = best.len().saturating_sub(1);
        let mut clique = Vec::with_capacity(bound);
        s.expand_colored(&mut clique, Bits::full(later.len()));
        outer.nodes = s.nodes;
        if !s.best.is_empty() && s.best.len() + 1 > best.len() {
            let mut found: Vec<usize> = s.best.iter().map(|&i| later[i]).collect();
            found.push(v);
            best = found;
        }
        if s.exhausted {
            exhausted = true;
            break;
        }
    }
    best.sort_unstable();
    RawOutcome {
        clique: best,
        exhausted,
        nodes: outer.nodes,
    }
}

fn local_adjacency(g: &Graph, verts: &[usize]) -> Vec<Bits> {
    verts
        .iter()
        .map(|&u| {
            let mut row = Bits::new(verts.len());
            let nbrs = g.neighbors(u);
            for (j, &w) in verts.iter().enumerate() {
                if w != u && nbrs.binary_search(&w).is_ok() {
                    row.insert(j);
                }
            }
            row
        })
        .collect()
}

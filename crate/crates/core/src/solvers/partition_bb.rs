//! Branch and bound whose color-class bound is tightened by unit
//! propagation over the classes. "Pick one vertex from every class" acts as
//! a set of soft clauses and non-adjacency as hard conflicts; every disjoint
//! group of classes that propagation proves jointly unsatisfiable lowers the
//! bound by one. The tightened bound is re-checked each time the branching
//! loop descends to a lower color, where the remaining candidates are
//! exactly the lower classes.

use std::collections::VecDeque;
use std::time::Instant;

use super::bitset::Bits;
use super::search::{Reordered, Search};
use super::{Budget, RawOutcome};
use crate::graph::{core_decomposition, Graph};

/// Propagation is only attempted when this many groups would suffice to prune.
const MAX_EXCESS: usize = 2;
/// Largest class tried as a failed literal.
const FAILED_LITERAL_MAX: usize = 2;

pub(crate) fn run(g: &Graph, budget: &Budget, start: Instant) -> RawOutcome {
    let mut order = core_decomposition(g).peel_order;
    order.reverse();
    let r = Reordered::new(g, order);
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
    let classes = s.color_classes(&cand);
    let n = s.n();
    let class_bits: Vec<Bits> = classes
        .iter()
        .map(|c| {
            let mut b = Bits::new(n);
            c.iter().for_each(|&v| b.insert(v));
            b
        })
        .collect();
    // Groups stay valid while every member class is still present.
    let mut groups: Vec<usize> = Vec::new();
    let mut stale = true;
    for c in (0..classes.len()).rev() {
        // Remaining candidates are exactly classes[..=c].
        let colors = c + 1;
        if clique.len() + colors <= s.target() {
            return;
        }
        let excess = clique.len() + colors - s.target();
        if excess <= MAX_EXCESS {
            let before = groups.len();
            groups.retain(|&top| top <= c);
            if groups.len() < before {
                stale = true;
            }
            if groups.len() < excess && stale {
                groups = inconsistent_groups(s.adj, &class_bits[..colors], &classes[..colors], excess);
                stale = false;
            }
            if groups.len() >= excess {
                return;
            }
        }
        for &v in classes[c].iter().rev() {
            if clique.len() + colors <= s.target() {
                return;
            }
            clique.push(v);
            let next = cand.and(&s.adj[v]);
            if next.is_empty() {
                s.offer(clique);
            } else {
                expand(s, clique, next);
            }
            clique.pop();
            if s.exhausted {
                return;
            }
            cand.remove(v);
        }
    }
}

/// Finds up to `target` disjoint groups of classes that cannot all
/// contribute a vertex to one clique. Each group is reported by its
/// highest class index.
pub(crate) fn inconsistent_groups(
    adj: &[Bits],
    class_bits: &[Bits],
    classes: &[Vec<usize>],
    target: usize,
) -> Vec<usize> {
    let k = classes.len();
    let mut used = vec![false; k];
    let mut found = Vec::new();
    let mut sc = Scratch::new(k, adj.len());
    loop {
        let mut progress = false;
        // Unit classes first, then small classes as failed literals.
        for size in 1..=FAILED_LITERAL_MAX {
            for c in 0..k {
                if found.len() >= target {
                    return found;
                }
                if used[c] || classes[c].len() != size {
                    continue;
                }
                // Every choice of vertex in class c must lead to a conflict.
                let mut group = vec![c];
                let mut all_fail = true;
                for &u in &classes[c] {
                    match propagate(adj, class_bits, &used, c, u, &mut sc) {
                        Some(conflict) => group.extend(conflict),
                        None => {
                            all_fail = false;
                            break;
                        }
                    }
                }
                if all_fail {
                    for &g in &group {
                        used[g] = true;
                    }
                    found.push(group.into_iter().max().unwrap_or(c));
                    progress = true;
                }
            }
        }
        if !progress || found.len() >= target {
            return found;
        }
    }
}

/// Reusable buffers for repeated propagation over one set of classes.
struct Scratch {
    words: usize,
    dom: Vec<u64>,
    size: Vec<usize>,
    reasons: Vec<Vec<usize>>,
    fixed: Vec<bool>,
    queue: VecDeque<usize>,
}

impl Scratch {
    fn new(k: usize, n: usize) -> Self {
        Self {
            words: n.div_ceil(64),
            dom: Vec::new(),
            size: vec![0; k],
            reasons: vec![Vec::new(); k],
            fixed: vec![false; k],
            queue: VecDeque::new(),
        }
    }
}

/// Unit propagation after fixing class `start` to vertex `u`. Returns the
/// classes responsible for an emptied class, if any.
fn propagate(
    adj: &[Bits],
    class_bits: &[Bits],
    used: &[bool],
    start: usize,
    u: usize,
    sc: &mut Scratch,
) -> Option<Vec<usize>> {
    let k = class_bits.len();
    let w = sc.words;
    sc.dom.clear();
    for b in class_bits {
        sc.dom.extend_from_slice(b.words());
    }
    for (c, b) in class_bits.iter().enumerate() {
        sc.size[c] = b.count();
        sc.reasons[c].clear();
        sc.fixed[c] = false;
    }
    sc.dom[start * w..(start + 1) * w].fill(0);
    sc.dom[start * w + (u >> 6)] = 1 << (u & 63);
    sc.size[start] = 1;
    sc.queue.clear();
    sc.queue.push_back(start);
    sc.queue
        .extend((0..k).filter(|&c| c != start && !used[c] && sc.size[c] == 1));
    while let Some(a) = sc.queue.pop_front() {
        if sc.fixed[a] {
            continue;
        }
        sc.fixed[a] = true;
        let v = first_in(&sc.dom[a * w..(a + 1) * w]).expect("unit domain");
        let nv = adj[v].words();
        for b in 0..k {
            if b == a || used[b] || sc.fixed[b] {
                continue;
            }
            let d = &mut sc.dom[b * w..(b + 1) * w];
            let mut after = 0;
            for (x, y) in d.iter_mut().zip(nv) {
                *x &= y;
                after += x.count_ones() as usize;
            }
            if after < sc.size[b] {
                sc.size[b] = after;
                sc.reasons[b].push(a);
                match after {
                    0 => return Some(closure(b, &sc.reasons[..k])),
                    1 => sc.queue.push_back(b),
                    _ => {}
                }
            }
        }
    }
    None
}

fn first_in(words: &[u64]) -> Option<usize> {
    words
        .iter()
        .enumerate()
        .find(|(_, &x)| x != 0)
        .map(|(i, x)| i * 64 + x.trailing_zeros() as usize)
}

fn closure(from: usize, reasons: &[Vec<usize>]) -> Vec<usize> {
    let mut seen = vec![false; reasons.len()];
    let mut stack = vec![from];
    let mut out = Vec::new();
    while let Some(c) = stack.pop() {
        if std::mem::replace(&mut seen[c], true) {
            continue;
        }
        out.push(c);
        stack.extend(reasons[c].iter().copied());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(n: usize, classes: &[Vec<usize>]) -> Vec<Bits> {
        classes
            .iter()
            .map(|c| {
                let mut b = Bits::new(n);
                c.iter().for_each(|&v| b.insert(v));
                b
            })
            .collect()
    }

    #[test]
    fn odd_cycle_classes_are_inconsistent() {
        // C5 colored with 3 classes: {0,2}, {1,3}, {4}. No triangle exists,
        // so the three classes cannot all contribute.
        let g = Graph::cycle(5);
        let r = Reordered::new(&g, (0..5).collect());
        let classes = vec![vec![0, 2], vec![1, 3], vec![4]];
        assert_eq!(inconsistent_groups(&r.adj, &bits(5, &classes), &classes, 1).len(), 1);
    }

    #[test]
    fn clique_classes_are_consistent() {
        let g = Graph::complete(4);
        let r = Reordered::new(&g, (0..4).collect());
        let classes = vec![vec![0], vec![1], vec![2], vec![3]];
        assert_eq!(inconsistent_groups(&r.adj, &bits(4, &classes), &classes, 2).len(), 0);
    }
}

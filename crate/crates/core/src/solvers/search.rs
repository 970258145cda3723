//! Shared branch-and-bound machinery: vertex reordering into bitset
//! adjacency, budget accounting and greedy sequential coloring.

use std::time::Instant;

use super::bitset::Bits;
use super::Budget;
use crate::graph::Graph;

/// Adjacency rows indexed by position in `order`.
pub(crate) struct Reordered {
    pub adj: Vec<Bits>,
    /// `order[i]` is the original id of internal vertex `i`.
    pub order: Vec<usize>,
}

impl Reordered {
    pub fn new(g: &Graph, order: Vec<usize>) -> Self {
        let n = g.node_count();
        let mut pos = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        let adj = order
            .iter()
            .map(|&v| {
                let mut row = Bits::new(n);
                for &w in g.neighbors(v) {
                    row.insert(pos[w]);
                }
                row
            })
            .collect();
        Self { adj, order }
    }

    pub fn to_original(&self, clique: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = clique.iter().map(|&i| self.order[i]).collect();
        out.sort_unstable();
        out
    }
}

/// Degree descending, lowest id first among equal degrees.
pub(crate) fn degree_descending_order(g: &Graph) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.node_count()).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
    order
}

/// Incumbent and budget state for one solver run.
pub(crate) struct Search<'a> {
    pub adj: &'a [Bits],
    budget: &'a Budget,
    start: Instant,
    pub nodes: u64,
    pub best: Vec<usize>,
    /// Size an offered clique must exceed even when `best` is smaller.
    pub floor: usize,
    pub exhausted: bool,
}

impl<'a> Search<'a> {
    pub fn new(adj: &'a [Bits], budget: &'a Budget, start: Instant) -> Self {
        Self {
            adj,
            budget,
            start,
            nodes: 0,
            best: Vec::new(),
            floor: 0,
            exhausted: false,
        }
    }

    /// Counts one search-tree node; false once the budget is spent.
    #[inline]
    pub fn enter(&mut self) -> bool {
        if self.exhausted {
            return false;
        }
        self.nodes += 1;
        if self.budget.node_limit.is_some_and(|lim| self.nodes > lim)
            || self.start.elapsed() >= self.budget.time_limit
        {
            self.exhausted = true;
        }
        !self.exhausted
    }

    /// Size to beat.
    #[inline]
    pub fn target(&self) -> usize {
        self.best.len().max(self.floor)
    }

    #[inline]
    pub fn offer(&mut self, clique: &[usize]) {
        if clique.len() > self.target() {
            self.best = clique.to_vec();
        }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    /// Greedy sequential coloring of `cand` in index order. Returns the
    /// vertices grouped by color class; `classes[c]` has color `c + 1`.
    pub fn color_classes(&self, cand: &Bits) -> Vec<Vec<usize>> {
        let mut uncolored = cand.clone();
        let mut classes = Vec::new();
        while !uncolored.is_empty() {
            let mut q = uncolored.clone();
            let mut class = Vec::new();
            while let Some(v) = q.first() {
                class.push(v);
                uncolored.remove(v);
                q.remove(v);
                q.and_not_assign(&self.adj[v]);
            }
            classes.push(class);
        }
        classes
    }

    /// Vertices of `cand` in ascending color order with their colors.
    pub fn color_sort(&self, cand: &Bits) -> (Vec<usize>, Vec<usize>) {
        let classes = self.color_classes(cand);
        let mut order = Vec::with_capacity(cand.count());
        let mut colors = Vec::with_capacity(order.capacity());
        for (c, class) in classes.into_iter().enumerate() {
            for v in class {
                order.push(v);
                colors.push(c + 1);
            }
        }
        (order, colors)
    }

    /// Coloring-bounded expansion: branch on vertices from the highest color
    /// down, pruning once `|clique| + color ≤ |best|`.
    pub fn expand_colored(&mut self, clique: &mut Vec<usize>, mut cand: Bits) {
        if !self.enter() {
            return;
        }
        let (order, colors) = self.color_sort(&cand);
        for i in (0..order.len()).rev() {
            if clique.len() + colors[i] <= self.target() {
                return;
            }
            let v = order[i];
            clique.push(v);
            let next = cand.and(&self.adj[v]);
            if next.is_empty() {
                self.offer(clique);
            } else {
                self.expand_colored(clique, next);
            }
            clique.pop();
            if self.exhausted {
                return;
            }
            cand.remove(v);
        }
    }
}

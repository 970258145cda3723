//! Undirected simple graphs and the structural primitives the feature,
//! solver and learning modules build on.

mod kcore;
mod parse;
mod triangles;

pub use kcore::{core_decomposition, CoreDecomposition};
pub use parse::{parse_dimacs_clq, parse_edge_list, read_graph_file};
pub use triangles::{count_triangles, TriangleCounts};
pub(crate) use triangles::sorted_intersection_len;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: malformed line {content:?}")]
    MalformedLine { line: usize, content: String },
    #[error("node {node} out of range for graph with {node_count} nodes")]
    NodeOutOfRange { node: usize, node_count: usize },
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Undirected simple graph on nodes `0..node_count` with sorted adjacency
/// lists. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph from an edge iterator. Self-loops are dropped and
    /// duplicate edges (in either orientation) collapse to one.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adj = vec![Vec::new(); node_count];
        for (u, v) in edges {
            for x in [u, v] {
                if x >= node_count {
                    return Err(GraphError::NodeOutOfRange {
                        node: x,
                        node_count,
                    });
                }
            }
            if u == v {
                continue;
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut twice = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            twice += list.len();
        }
        Ok(Self {
            adj,
            edge_count: twice / 2,
        })
    }

    pub fn empty(node_count: usize) -> Self {
        Self {
            adj: vec![Vec::new(); node_count],
            edge_count: 0,
        }
    }

    pub fn complete(n: usize) -> Self {
        let adj = (0..n)
            .map(|u| (0..n).filter(|&v| v != u).collect())
            .collect();
        Self {
            adj,
            edge_count: n * n.saturating_sub(1) / 2,
        }
    }

    pub fn cycle(n: usize) -> Self {
        Self::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).expect("ids in range")
    }

    pub fn path(n: usize) -> Self {
        Self::from_edges(n, (1..n).map(|i| (i - 1, i))).expect("ids in range")
    }

    /// Star with node 0 at the center.
    pub fn star(leaves: usize) -> Self {
        Self::from_edges(leaves + 1, (1..=leaves).map(|i| (0, i))).expect("ids in range")
    }

    pub fn petersen() -> Self {
        let outer = (0..5).map(|i| (i, (i + 1) % 5));
        let spokes = (0..5).map(|i| (i, i + 5));
        let inner = (0..5).map(|i| (5 + i, 5 + (i + 2) % 5));
        Self::from_edges(10, outer.chain(spokes).chain(inner)).expect("ids in range")
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let (a, b) = if self.adj[u].len() <= self.adj[v].len() {
            (u, v)
        } else {
            (v, u)
        };
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Relabels node `v` as `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self, GraphError> {
        assert_eq!(perm.len(), self.node_count(), "permutation length");
        Self::from_edges(self.node_count(), self.edges().map(|(u, v)| (perm[u], perm[v])))
    }

    /// Writes the graph in DIMACS clique format with 1-based ids.
    pub fn to_dimacs(&self) -> String {
        use std::fmt::Write;
        let mut s = String::with_capacity(16 + self.edge_count * 12);
        let _ = writeln!(s, "p edge {} {}", self.node_count(), self.edge_count);
        for (u, v) in self.edges() {
            let _ = writeln!(s, "e {} {}", u + 1, v + 1);
        }
        s
    }
}

/// Per-node degrees.
pub fn degree_sequence(g: &Graph) -> Vec<usize> {
    (0..g.node_count()).map(|v| g.degree(v)).collect()
}

/// True iff every pair in `nodes` is adjacent. Empty sets and singletons
/// are cliques; repeated ids are ignored.
pub fn is_clique(g: &Graph, nodes: &[usize]) -> Result<bool, GraphError> {
    let n = g.node_count();
    if let Some(&bad) = nodes.iter().find(|&&v| v >= n) {
        return Err(GraphError::NodeOutOfRange {
            node: bad,
            node_count: n,
        });
    }
    let mut s = nodes.to_vec();
    s.sort_unstable();
    s.dedup();
    Ok(s.iter()
        .enumerate()
        .all(|(i, &u)| s[i + 1..].iter().all(|&v| g.has_edge(u, v))))
}

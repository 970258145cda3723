use super::Graph;

/// Triangle totals and per-edge triangle counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriangleCounts {
    pub total: u64,
    /// `(u, v, count)` with `u < v`, in lexicographic edge order.
    pub per_edge: Vec<(usize, usize, u64)>,
}

impl TriangleCounts {
    pub fn get(&self, u: usize, v: usize) -> Option<u64> {
        let key = (u.min(v), u.max(v));
        self.per_edge
            .binary_search_by(|&(a, b, _)| (a, b).cmp(&key))
            .ok()
            .map(|i| self.per_edge[i].2)
    }

    pub fn max_per_edge(&self) -> u64 {
        self.per_edge.iter().map(|e| e.2).max().unwrap_or(0)
    }

    /// Triangles through each node.
    pub fn per_node(&self, node_count: usize) -> Vec<u64> {
        let mut twice = vec![0u64; node_count];
        for &(u, v, c) in &self.per_edge {
            twice[u] += c;
            twice[v] += c;
        }
        twice.into_iter().map(|t| t / 2).collect()
    }
}

pub(crate) fn sorted_intersection_len(a: &[usize], b: &[usize]) -> u64 {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

pub fn count_triangles(g: &Graph) -> TriangleCounts {
    let per_edge: Vec<_> = g
        .edges()
        .map(|(u, v)| (u, v, sorted_intersection_len(g.neighbors(u), g.neighbors(v))))
        .collect();
    let total = per_edge.iter().map(|e| e.2).sum::<u64>() / 3;
    TriangleCounts { total, per_edge }
}

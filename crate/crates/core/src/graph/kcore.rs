use super::Graph;

/// Result of peeling minimum-degree vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreDecomposition {
    pub core_number: Vec<usize>,
    pub degeneracy: usize,
    /// Removal order; each node has at most `degeneracy` neighbors later in it.
    pub peel_order: Vec<usize>,
}

/// Bucket peeling in O(n + m). Vertices start sorted by `(degree, id)`;
/// a vertex whose degree drops moves to the front of its new bucket, so
/// the order is fully determined by the input graph.
pub fn core_decomposition(g: &Graph) -> CoreDecomposition {
    let n = g.node_count();
    let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let max_deg = deg.iter().copied().max().unwrap_or(0);
    // bin[d] = first position of degree-d vertices in `vert`.
    let mut bin = vec![0usize; max_deg + 2];
    for &d in &deg {
        bin[d + 1] += 1;
    }
    for d in 1..bin.len() {
        bin[d] += bin[d - 1];
    }
    let mut vert = vec![0usize; n];
    let mut pos = vec![0usize; n];
    {
        let mut next = bin.clone();
        for v in 0..n {
            pos[v] = next[deg[v]];
            vert[pos[v]] = v;
            next[deg[v]] += 1;
        }
    }
    for i in 0..n {
        let v = vert[i];
        for &u in g.neighbors(v) {
            if deg[u] > deg[v] {
                let du = deg[u];
                let pu = pos[u];
                let pw = bin[du];
                let w = vert[pw];
                if u != w {
                    vert.swap(pu, pw);
                    pos[u] = pw;
                    pos[w] = pu;
                }
                bin[du] += 1;
                deg[u] -= 1;
            }
        }
    }
    CoreDecomposition {
        degeneracy: deg.iter().copied().max().unwrap_or(0),
        core_number: deg,
        peel_order: vert,
    }
}

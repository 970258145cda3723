//! The twelve global structural features, per-node features, and the
//! min-max / z-score normalizers used by the learning modules.

mod normalize;

pub use normalize::{minmax_fit_apply, zscore_fit_apply, MinMaxNormalizer, ZScoreNormalizer};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{core_decomposition, count_triangles, Graph, TriangleCounts};
use crate::matrix::DenseMatrix;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("graph has no edges")]
    NoEdges,
    #[error("node {node} out of range for graph with {node_count} nodes")]
    NodeOutOfRange { node: usize, node_count: usize },
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
}

/// Column names, in the fixed order used by every feature vector and CSV.
pub const FEATURE_NAMES: [&str; 12] = [
    "V", "E", "d_max", "d_avg", "D", "r", "T", "T_avg", "T_max", "kappa_avg", "kappa", "K",
];

pub const FEATURE_COUNT: usize = FEATURE_NAMES.len();

/// Index of the density column in [`FEATURE_NAMES`].
pub const DENSITY_INDEX: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GlobalFeatures<T> {
    pub nodes: u64,
    pub edges: u64,
    pub max_degree: u64,
    pub avg_degree: T,
    pub density: T,
    pub assortativity: T,
    pub triangles: u64,
    pub avg_edge_triangles: T,
    pub max_edge_triangles: u64,
    pub avg_local_clustering: T,
    pub global_clustering: T,
    pub max_core: u64,
}

impl<T: Scalar> GlobalFeatures<T> {
    pub fn to_vector(&self) -> [T; FEATURE_COUNT] {
        let c = |x: u64| T::lit(x as f64);
        [
            c(self.nodes),
            c(self.edges),
            c(self.max_degree),
            self.avg_degree,
            self.density,
            self.assortativity,
            c(self.triangles),
            self.avg_edge_triangles,
            c(self.max_edge_triangles),
            self.avg_local_clustering,
            self.global_clustering,
            c(self.max_core),
        ]
    }

    /// Inverse of [`to_vector`](Self::to_vector); count columns are rounded.
    pub fn from_vector(v: &[T; FEATURE_COUNT]) -> Self {
        let c = |x: T| x.as_f64().round().max(0.0) as u64;
        Self {
            nodes: c(v[0]),
            edges: c(v[1]),
            max_degree: c(v[2]),
            avg_degree: v[3],
            density: v[4],
            assortativity: v[5],
            triangles: c(v[6]),
            avg_edge_triangles: v[7],
            max_edge_triangles: c(v[8]),
            avg_local_clustering: v[9],
            global_clustering: v[10],
            max_core: c(v[11]),
        }
    }

    /// Cell strings in column order.
    pub fn to_record(&self) -> Vec<String> {
        vec![
            self.nodes.to_string(),
            self.edges.to_string(),
            self.max_degree.to_string(),
            self.avg_degree.to_string(),
            self.density.to_string(),
            self.assortativity.to_string(),
            self.triangles.to_string(),
            self.avg_edge_triangles.to_string(),
            self.max_edge_triangles.to_string(),
            self.avg_local_clustering.to_string(),
            self.global_clustering.to_string(),
            self.max_core.to_string(),
        ]
    }

    pub fn from_record<S: AsRef<str>>(cells: &[S]) -> Result<Self, String> {
        if cells.len() != FEATURE_COUNT {
            return Err(format!("expected {FEATURE_COUNT} feature cells, got {}", cells.len()));
        }
        let int = |i: usize| -> Result<u64, String> {
            cells[i]
                .as_ref()
                .trim()
                .parse()
                .map_err(|_| format!("column {}: bad integer {:?}", FEATURE_NAMES[i], cells[i].as_ref()))
        };
        let real = |i: usize| -> Result<T, String> {
            cells[i]
                .as_ref()
                .trim()
                .parse()
                .map_err(|_| format!("column {}: bad number {:?}", FEATURE_NAMES[i], cells[i].as_ref()))
        };
        Ok(Self {
            nodes: int(0)?,
            edges: int(1)?,
            max_degree: int(2)?,
            avg_degree: real(3)?,
            density: real(4)?,
            assortativity: real(5)?,
            triangles: int(6)?,
            avg_edge_triangles: real(7)?,
            max_edge_triangles: int(8)?,
            avg_local_clustering: real(9)?,
            global_clustering: real(10)?,
            max_core: int(11)?,
        })
    }
}

/// Degree assortativity and whether its denominator vanished.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assortativity<T> {
    pub value: T,
    /// Set when all edge endpoints have the same degree; `value` is then 0.
    pub degenerate: bool,
}

/// Degree assortativity over the `M` edges, with endpoint degrees `j`, `k`:
///
/// `r = (Σjk/M − [Σ(j+k)/2M]²) / (Σ(j²+k²)/2M − [Σ(j+k)/2M]²)`
///
/// Numerator and denominator are scaled by `4M²` and evaluated exactly in
/// integers, so the zero-variance case is detected without rounding.
pub fn assortativity<T: Scalar>(g: &Graph) -> Result<Assortativity<T>, FeatureError> {
    let m = g.edge_count() as i128;
    if m == 0 {
        return Err(FeatureError::NoEdges);
    }
    let (mut s_jk, mut s_sum, mut s_sq) = (0i128, 0i128, 0i128);
    for (u, v) in g.edges() {
        let (j, k) = (g.degree(u) as i128, g.degree(v) as i128);
        s_jk += j * k;
        s_sum += j + k;
        s_sq += j * j + k * k;
    }
    let num = 4 * m * s_jk - s_sum * s_sum;
    let den = 2 * m * s_sq - s_sum * s_sum;
    if den == 0 {
        return Ok(Assortativity {
            value: T::zero(),
            degenerate: true,
        });
    }
    let value = T::lit(num as f64 / den as f64);
    Ok(Assortativity {
        value: value.max(-T::one()).min(T::one()),
        degenerate: false,
    })
}

/// Fraction of neighbor pairs of `v` that are adjacent; 0 for degree ≤ 1.
pub fn local_clustering<T: Scalar>(g: &Graph, v: usize) -> Result<T, FeatureError> {
    if v >= g.node_count() {
        return Err(FeatureError::NodeOutOfRange {
            node: v,
            node_count: g.node_count(),
        });
    }
    let k = g.degree(v);
    if k <= 1 {
        return Ok(T::zero());
    }
    let nbrs = g.neighbors(v);
    let twice_links: u64 = nbrs
        .iter()
        .map(|&u| crate::graph::sorted_intersection_len(g.neighbors(u), nbrs))
        .sum();
    Ok(clustering_ratio(twice_links / 2, k))
}

fn clustering_ratio<T: Scalar>(links: u64, k: usize) -> T {
    if k <= 1 {
        return T::zero();
    }
    T::lit(2.0 * links as f64) / T::lit(k as f64 * (k as f64 - 1.0))
}

pub fn avg_local_clustering<T: Scalar>(g: &Graph) -> Result<T, FeatureError> {
    if g.is_empty() {
        return Err(FeatureError::EmptyGraph);
    }
    let tri = count_triangles(g);
    Ok(avg_local_from_counts(g, &tri))
}

fn avg_local_from_counts<T: Scalar>(g: &Graph, tri: &TriangleCounts) -> T {
    let per_node = tri.per_node(g.node_count());
    // Summed in sorted order so the result does not depend on node labels.
    let mut ratios: Vec<T> = (0..g.node_count())
        .map(|v| clustering_ratio::<T>(per_node[v], g.degree(v)))
        .collect();
    ratios.sort_by(|a, b| a.partial_cmp(b).expect("finite ratio"));
    ratios.into_iter().sum::<T>() / T::from_count(g.node_count())
}

/// `3·T / N_T` with `N_T = Σ_v C(deg v, 2)`; 0 when there are no connected triplets.
pub fn global_clustering<T: Scalar>(g: &Graph) -> T {
    global_from_counts(g, count_triangles(g).total)
}

fn global_from_counts<T: Scalar>(g: &Graph, triangles: u64) -> T {
    let triplets: u64 = (0..g.node_count())
        .map(|v| {
            let d = g.degree(v) as u64;
            d * d.saturating_sub(1) / 2
        })
        .sum();
    if triplets == 0 {
        return T::zero();
    }
    T::lit(3.0 * triangles as f64 / triplets as f64)
}

pub fn density<T: Scalar>(g: &Graph) -> T {
    let n = g.node_count() as f64;
    if n < 2.0 {
        return T::zero();
    }
    T::lit(2.0 * g.edge_count() as f64 / (n * (n - 1.0)))
}

pub fn extract_global<T: Scalar>(g: &Graph) -> Result<GlobalFeatures<T>, FeatureError> {
    if g.is_empty() {
        return Err(FeatureError::EmptyGraph);
    }
    let n = g.node_count();
    let m = g.edge_count();
    let tri = count_triangles(g);
    let cores = core_decomposition(g);
    let avg_edge_triangles = if m == 0 {
        T::zero()
    } else {
        T::lit(tri.per_edge.iter().map(|e| e.2).sum::<u64>() as f64 / m as f64)
    };
    let assort = match assortativity::<T>(g) {
        Ok(a) => a.value,
        Err(FeatureError::NoEdges) => T::zero(),
        Err(e) => return Err(e),
    };
    Ok(GlobalFeatures {
        nodes: n as u64,
        edges: m as u64,
        max_degree: g.max_degree() as u64,
        avg_degree: T::lit(2.0 * m as f64 / n as f64),
        density: density(g),
        assortativity: assort,
        triangles: tri.total,
        avg_edge_triangles,
        max_edge_triangles: tri.max_per_edge(),
        avg_local_clustering: avg_local_from_counts(g, &tri),
        global_clustering: global_from_counts(g, tri.total),
        max_core: cores.degeneracy as u64,
    })
}

/// Unnormalized `(degree, core number)` rows, one per node.
pub fn node_features<T: Scalar>(g: &Graph) -> Result<DenseMatrix<T>, FeatureError> {
    if g.is_empty() {
        return Err(FeatureError::EmptyGraph);
    }
    let cores = core_decomposition(g);
    Ok(DenseMatrix::from_fn(g.node_count(), 2, |v, j| {
        let x = if j == 0 { g.degree(v) } else { cores.core_number[v] };
        T::from_count(x)
    }))
}

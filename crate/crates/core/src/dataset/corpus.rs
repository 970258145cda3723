//! Seeded synthetic graph corpora: Erdős–Rényi, preferential attachment,
//! and random graphs with a planted clique.

use rand::seq::index;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use std::fs;
use std::path::Path;

use super::DatasetError;
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorFamily {
    ErdosRenyi,
    PreferentialAttachment,
    PlantedClique,
}

impl GeneratorFamily {
    fn tag(self) -> &'static str {
        match self {
            GeneratorFamily::ErdosRenyi => "er",
            GeneratorFamily::PreferentialAttachment => "pa",
            GeneratorFamily::PlantedClique => "pc",
        }
    }
}

/// One batch of graphs from a single family. Sizes and densities are drawn
/// uniformly from the inclusive ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: GeneratorFamily,
    pub nodes: (usize, usize),
    pub density: (f64, f64),
    /// Planted clique size range; required for the planted family.
    #[serde(default)]
    pub clique: Option<(usize, usize)>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub generators: Vec<GeneratorSpec>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct GeneratedGraph {
    pub id: String,
    pub family: GeneratorFamily,
    pub graph: Graph,
    /// Requested edge probability (or target density for preferential attachment).
    pub density: f64,
    pub planted: Option<usize>,
}

impl CorpusSpec {
    /// 300 graphs, 100 per family, over several size/density bands. Dense
    /// bands use small graphs so every instance stays within a desk-scale
    /// solve budget.
    pub fn default_with_seed(seed: u64) -> Self {
        use GeneratorFamily::*;
        let band = |family, nodes, density, clique, count| GeneratorSpec {
            family,
            nodes,
            density,
            clique,
            count,
        };
        Self {
            seed,
            generators: vec![
                band(ErdosRenyi, (500, 2000), (0.01, 0.05), None, 20),
                band(ErdosRenyi, (100, 400), (0.05, 0.4), None, 20),
                band(ErdosRenyi, (60, 150), (0.4, 0.7), None, 15),
                band(ErdosRenyi, (100, 200), (0.6, 0.8), None, 25),
                band(ErdosRenyi, (70, 120), (0.85, 0.95), None, 20),
                band(PreferentialAttachment, (500, 2000), (0.01, 0.05), None, 35),
                band(PreferentialAttachment, (100, 500), (0.05, 0.3), None, 30),
                band(PreferentialAttachment, (100, 300), (0.3, 0.7), None, 35),
                band(PlantedClique, (200, 1000), (0.01, 0.1), Some((8, 30)), 25),
                band(PlantedClique, (60, 150), (0.1, 0.5), Some((10, 25)), 25),
                band(PlantedClique, (100, 200), (0.6, 0.85), Some((20, 40)), 30),
                band(PlantedClique, (20, 60), (0.5, 0.95), Some((8, 20)), 20),
            ],
        }
    }

    pub fn total(&self) -> usize {
        self.generators.iter().map(|g| g.count).sum()
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let invalid = |msg: String| Err(DatasetError::InvalidSpec(msg));
        if self.total() == 0 {
            return invalid("corpus must contain at least one graph".into());
        }
        for (i, g) in self.generators.iter().enumerate() {
            let (lo, hi) = g.nodes;
            if lo == 0 || lo > hi {
                return invalid(format!("generator {i}: bad node range {lo}..={hi}"));
            }
            let (dlo, dhi) = g.density;
            if !(dlo > 0.0 && dlo <= dhi && dhi <= 1.0) {
                return invalid(format!("generator {i}: density range {dlo}..={dhi} outside (0, 1]"));
            }
            if g.family == GeneratorFamily::PlantedClique {
                match g.clique {
                    Some((klo, khi)) if klo >= 2 && klo <= khi && khi <= lo => {}
                    other => {
                        return invalid(format!(
                            "generator {i}: planted clique range {other:?} must satisfy 2 <= k <= min nodes"
                        ))
                    }
                }
            }
        }
        Ok(())
    }
}

/// Generates every graph of the corpus. Each graph draws from its own
/// ChaCha stream keyed by its position, so the output does not depend on
/// thread scheduling.
pub fn corpus_generate(spec: &CorpusSpec) -> Result<Vec<GeneratedGraph>, DatasetError> {
    spec.validate()?;
    let jobs: Vec<(usize, &GeneratorSpec, usize)> = spec
        .generators
        .iter()
        .enumerate()
        .flat_map(|(gi, g)| (0..g.count).map(move |k| (gi, g, k)))
        .enumerate()
        .map(|(global, (_, g, k))| (global, g, k))
        .collect();
    let width = spec.total().to_string().len().max(3);
    Ok(jobs
        .par_iter()
        .map(|&(global, g, _)| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(global as u64);
            let n = rng.gen_range(g.nodes.0..=g.nodes.1);
            let p = if g.density.0 == g.density.1 {
                g.density.0
            } else {
                rng.gen_range(g.density.0..=g.density.1)
            };
            let (graph, planted) = match g.family {
                GeneratorFamily::ErdosRenyi => (erdos_renyi(n, p, &mut rng), None),
                GeneratorFamily::PreferentialAttachment => {
                    let m = ((p * (n as f64 - 1.0)) / 2.0).round().max(1.0) as usize;
                    (preferential_attachment(n, m.min(n - 1).max(1), &mut rng), None)
                }
                GeneratorFamily::PlantedClique => {
                    let (klo, khi) = g.clique.expect("validated");
                    let k = rng.gen_range(klo..=khi.min(n));
                    (planted_clique(n, p, k, &mut rng), Some(k))
                }
            };
            GeneratedGraph {
                id: format!("{}{:0width$}", g.family.tag(), global, width = width),
                family: g.family,
                graph,
                density: p,
                planted,
            }
        })
        .collect())
}

pub fn erdos_renyi<R: Rng>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if p >= 1.0 || rng.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).expect("ids in range")
}

/// Each new node attaches to `m` distinct earlier nodes chosen with
/// probability proportional to degree, starting from a clique on `m + 1` nodes.
pub fn preferential_attachment<R: Rng>(n: usize, m: usize, rng: &mut R) -> Graph {
    let seed_nodes = (m + 1).min(n);
    let mut edges = Vec::new();
    let mut endpoints = Vec::new();
    for u in 0..seed_nodes {
        for v in u + 1..seed_nodes {
            edges.push((u, v));
            endpoints.extend([u, v]);
        }
    }
    for v in seed_nodes..n {
        let mut targets: Vec<usize> = Vec::with_capacity(m);
        while targets.len() < m {
            let t = endpoints[rng.gen_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for t in targets {
            edges.push((t, v));
            endpoints.extend([t, v]);
        }
    }
    Graph::from_edges(n, edges).expect("ids in range")
}

pub fn planted_clique<R: Rng>(n: usize, p: f64, k: usize, rng: &mut R) -> Graph {
    let base = erdos_renyi(n, p, rng);
    let mut members = index::sample(rng, n, k).into_vec();
    members.sort_unstable();
    let mut edges: Vec<(usize, usize)> = base.edges().collect();
    for (i, &u) in members.iter().enumerate() {
        for &v in &members[i + 1..] {
            edges.push((u, v));
        }
    }
    Graph::from_edges(n, edges).expect("ids in range")
}

pub const CORPUS_INDEX: &str = "corpus.csv";

/// Writes every graph as `<id>.clq` plus an index with family, requested
/// density, and planted clique size.
pub fn save_corpus(dir: &Path, graphs: &[GeneratedGraph]) -> Result<(), DatasetError> {
    fs::create_dir_all(dir)?;
    let mut index = csv::Writer::from_path(dir.join(CORPUS_INDEX))?;
    index.write_record(["instance_id", "family", "nodes", "edges", "density", "planted"])?;
    for g in graphs {
        fs::write(dir.join(format!("{}.clq", g.id)), g.graph.to_dimacs())?;
        index.write_record([
            g.id.clone(),
            g.family.tag().to_owned(),
            g.graph.node_count().to_string(),
            g.graph.edge_count().to_string(),
            g.density.to_string(),
            g.planted.map(|k| k.to_string()).unwrap_or_default(),
        ])?;
    }
    index.flush()?;
    Ok(())
}

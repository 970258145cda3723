//! Brute-force oracles and the check suites shared by the integration and
//! acceptance tests. Oracles work on a dense adjacency matrix and never call
//! the library's graph algorithms.

#![allow(dead_code)]

use cliquesel::dataset::corpus::planted_clique;
use cliquesel::features::{extract_global, FEATURE_NAMES};
use cliquesel::graph::{is_clique, Graph};
use cliquesel::metrics::MetricReport;
use cliquesel::nn::{structure_embedding, GraphInput, ModelConfig, ModelParams};
use cliquesel::solvers::{clique_core_gap, run_portfolio, Budget, SolveStatus};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Adj {
    pub n: usize,
    m: Vec<bool>,
}

impl Adj {
    pub fn of(g: &Graph) -> Self {
        let n = g.node_count();
        let mut m = vec![false; n * n];
        for (u, v) in g.edges() {
            m[u * n + v] = true;
            m[v * n + u] = true;
        }
        Self { n, m }
    }

    pub fn has(&self, u: usize, v: usize) -> bool {
        self.m[u * self.n + v]
    }

    pub fn degree(&self, u: usize) -> usize {
        (0..self.n).filter(|&v| self.has(u, v)).count()
    }
}

pub fn random_graph<R: Rng>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

/// The twelve features straight from their definitions.
pub fn feature_oracle(g: &Graph) -> [f64; 12] {
    let a = Adj::of(g);
    let n = a.n;
    let deg: Vec<usize> = (0..n).map(|u| a.degree(u)).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if a.has(u, v) {
                edges.push((u, v));
            }
        }
    }
    let m = edges.len();

    // Pearson correlation of endpoint degrees over both edge orientations.
    let r = if m == 0 {
        0.0
    } else {
        let xs: Vec<f64> = edges.iter().flat_map(|&(u, v)| [deg[u] as f64, deg[v] as f64]).collect();
        let ys: Vec<f64> = edges.iter().flat_map(|&(u, v)| [deg[v] as f64, deg[u] as f64]).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean) * (y - mean)).sum();
        let var: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
        if var == 0.0 {
            0.0
        } else {
            cov / var
        }
    };

    let mut triangles = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if a.has(i, j) && a.has(j, k) && a.has(i, k) {
                    triangles += 1;
                }
            }
        }
    }
    let per_edge: Vec<u64> = edges
        .iter()
        .map(|&(u, v)| (0..n).filter(|&w| a.has(u, w) && a.has(v, w)).count() as u64)
        .collect();
    let t_avg = if m == 0 { 0.0 } else { per_edge.iter().sum::<u64>() as f64 / m as f64 };
    let t_max = per_edge.iter().copied().max().unwrap_or(0);

    let local: Vec<f64> = (0..n)
        .map(|v| {
            let nb: Vec<usize> = (0..n).filter(|&u| a.has(v, u)).collect();
            let k = nb.len();
            if k < 2 {
                return 0.0;
            }
            let mut links = 0;
            for i in 0..k {
                for j in i + 1..k {
                    if a.has(nb[i], nb[j]) {
                        links += 1;
                    }
                }
            }
            links as f64 / (k * (k - 1) / 2) as f64
        })
        .collect();
    let triplets: usize = deg.iter().map(|&d| d * d.saturating_sub(1) / 2).sum();
    let kappa = if triplets == 0 { 0.0 } else { 3.0 * triangles as f64 / triplets as f64 };

    // Largest k with a nonempty k-core, by repeated deletion.
    let mut degeneracy = 0;
    for k in 1..=n {
        let mut alive = vec![true; n];
        loop {
            let drop: Vec<usize> = (0..n)
                .filter(|&u| alive[u] && (0..n).filter(|&v| alive[v] && a.has(u, v)).count() < k)
                .collect();
            if drop.is_empty() {
                break;
            }
            drop.into_iter().for_each(|u| alive[u] = false);
        }
        if alive.iter().any(|&x| x) {
            degeneracy = k;
        } else {
            break;
        }
    }

    [
        n as f64,
        m as f64,
        deg.iter().copied().max().unwrap_or(0) as f64,
        2.0 * m as f64 / n as f64,
        if n < 2 { 0.0 } else { 2.0 * m as f64 / (n * (n - 1)) as f64 },
        r,
        triangles as f64,
        t_avg,
        t_max as f64,
        local.iter().sum::<f64>() / n as f64,
        kappa,
        degeneracy as f64,
    ]
}

/// Clique number by Bron–Kerbosch enumeration of all maximal cliques, with
/// Tomita pivoting.
pub fn omega_oracle(g: &Graph) -> usize {
    fn bk(a: &Adj, r: usize, mut p: Vec<usize>, mut x: Vec<usize>, best: &mut usize) {
        if p.is_empty() && x.is_empty() {
            *best = (*best).max(r);
            return;
        }
        let pivot = p
            .iter()
            .chain(&x)
            .copied()
            .max_by_key(|&u| p.iter().filter(|&&v| a.has(u, v)).count())
            .expect("p or x nonempty");
        let branch: Vec<usize> = p.iter().copied().filter(|&v| !a.has(pivot, v)).collect();
        for v in branch {
            let np: Vec<usize> = p.iter().copied().filter(|&u| a.has(v, u)).collect();
            let nx: Vec<usize> = x.iter().copied().filter(|&u| a.has(v, u)).collect();
            bk(a, r + 1, np, nx, best);
            p.retain(|&u| u != v);
            x.push(v);
        }
    }
    let a = Adj::of(g);
    let mut best = 0;
    bk(&a, 0, (0..a.n).collect(), Vec::new(), &mut best);
    best
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Mixed sizes and densities, `n ≤ max_n`.
pub fn graph_sample(count: usize, max_n: usize, seed: u64) -> Vec<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=max_n);
            let p = [0.05, 0.2, 0.5, 0.8, 0.95][rng.gen_range(0..5)];
            random_graph(n, p, &mut rng)
        })
        .collect()
}

pub fn feature_suite(count: usize, seed: u64) -> Result<String, String> {
    let graphs = graph_sample(count, 60, seed);
    let mut worst: f64 = 0.0;
    for (i, g) in graphs.iter().enumerate() {
        let got = extract_global::<f64>(g).map_err(|e| format!("graph {i}: {e}"))?.to_vector();
        let want = feature_oracle(g);
        for k in 0..12 {
            let d = (got[k] - want[k]).abs();
            worst = worst.max(d);
            if !close(got[k], want[k], 1e-9) {
                return Err(format!("graph {i} feature {}: got {} want {}", FEATURE_NAMES[k], got[k], want[k]));
            }
        }
    }
    Ok(format!("{count} graphs, max abs deviation {worst:.2e}"))
}

/// Random graphs plus K5, C5, Petersen and a planted 12-clique.
pub fn solver_graphs(count: usize, seed: u64) -> Vec<(String, Graph)> {
    let mut out: Vec<(String, Graph)> = graph_sample(count, 40, seed)
        .into_iter()
        .enumerate()
        .map(|(i, g)| (format!("random{i}"), g))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    out.push(("K5".into(), Graph::complete(5)));
    out.push(("C5".into(), Graph::cycle(5)));
    out.push(("Petersen".into(), Graph::petersen()));
    out.push(("planted-K12".into(), planted_clique(40, 0.3, 12, &mut rng)));
    out
}

pub fn solver_suite(count: usize, seed: u64) -> Result<String, String> {
    let budget = Budget::seconds(60.0).unwrap();
    let mut exact = 0;
    for (name, g) in solver_graphs(count, seed) {
        let omega = omega_oracle(&g);
        let outs = run_portfolio(&g, &budget).map_err(|e| format!("{name}: {e}"))?;
        for o in &outs {
            if o.status != SolveStatus::Exact {
                continue;
            }
            exact += 1;
            if o.size != omega || o.clique.len() != omega {
                return Err(format!("{name}: {} found {} but omega is {omega}", o.solver, o.size));
            }
            if !is_clique(&g, &o.clique).map_err(|e| e.to_string())? {
                return Err(format!("{name}: {} returned a non-clique", o.solver));
            }
        }
        if let Some(o) = outs.iter().find(|o| o.size != outs[0].size) {
            return Err(format!("{name}: {} and {} disagree", outs[0].solver, o.solver));
        }
        if name == "planted-K12" && omega < 12 {
            return Err(format!("planted clique lost: omega {omega}"));
        }
    }
    Ok(format!("{} graphs, {exact} exact outcomes all match the oracle", count + 4))
}

pub fn gap_suite(count: usize, seed: u64) -> Result<String, String> {
    let budget = Budget::seconds(60.0).unwrap();
    for (name, g) in solver_graphs(count, seed) {
        let o = &run_portfolio(&g, &budget).map_err(|e| e.to_string())?[0];
        if o.status == SolveStatus::Exact && clique_core_gap(&g, o.size) < 0 {
            return Err(format!("{name}: negative gap"));
        }
    }
    for n in 2..=10 {
        let gap = clique_core_gap(&Graph::complete(n), n);
        if gap != 0 {
            return Err(format!("K{n}: gap {gap}"));
        }
    }
    Ok(format!("gap >= 0 on {} solved graphs, 0 on K2..K10", count + 4))
}

fn permuted<R: Rng>(g: &Graph, rng: &mut R) -> Graph {
    let mut perm: Vec<usize> = (0..g.node_count()).collect();
    perm.shuffle(rng);
    g.relabel(&perm).unwrap()
}

pub fn permutation_suite(count: usize, seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = ModelConfig::default();
    let params = ModelParams::<f64>::init(&cfg, &mut rng);
    let mut worst: f64 = 0.0;
    for (i, g) in graph_sample(count, 60, seed).iter().enumerate() {
        let h = permuted(g, &mut rng);
        let fa = extract_global::<f64>(g).map_err(|e| e.to_string())?;
        let fb = extract_global::<f64>(&h).map_err(|e| e.to_string())?;
        if fa != fb {
            return Err(format!("graph {i}: features changed under relabeling"));
        }
        let za = structure_embedding(&cfg, &params, &GraphInput::from_graph(g).map_err(|e| e.to_string())?);
        let zb = structure_embedding(&cfg, &params, &GraphInput::from_graph(&h).map_err(|e| e.to_string())?);
        for (a, b) in za.iter().zip(&zb) {
            worst = worst.max((a - b).abs());
        }
        if worst > 1e-6 {
            return Err(format!("graph {i}: z_struct moved by {worst:e}"));
        }
    }
    Ok(format!("{count} graphs, features exact, z_struct max deviation {worst:.2e}"))
}

/// Accuracy, macro F1 and weighted F1 from their definitions; undefined
/// ratios count as 0.
pub fn metric_oracle(t: &[usize], p: &[usize], classes: usize) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let acc = t.iter().zip(p).filter(|(a, b)| a == b).count() as f64 / n;
    let mut f1s = Vec::new();
    let mut supports = Vec::new();
    for c in 0..classes {
        let tp = t.iter().zip(p).filter(|&(&a, &b)| a == c && b == c).count() as f64;
        let fp = t.iter().zip(p).filter(|&(&a, &b)| a != c && b == c).count() as f64;
        let fn_ = t.iter().zip(p).filter(|&(&a, &b)| a == c && b != c).count() as f64;
        let prec = if tp + fp == 0.0 { 0.0 } else { tp / (tp + fp) };
        let rec = if tp + fn_ == 0.0 { 0.0 } else { tp / (tp + fn_) };
        f1s.push(if prec + rec == 0.0 { 0.0 } else { 2.0 * prec * rec / (prec + rec) });
        supports.push((tp + fn_) / n);
    }
    let macro_f1 = f1s.iter().sum::<f64>() / classes as f64;
    let weighted = f1s.iter().zip(&supports).map(|(f, w)| f * w).sum();
    (acc, macro_f1, weighted)
}

pub fn metric_suite(cases: usize, seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut equal_cases = 0;
    for case in 0..cases {
        let classes = rng.gen_range(2..=6);
        let (t, p): (Vec<usize>, Vec<usize>) = if case % 4 == 0 {
            // Equal supports.
            let per = rng.gen_range(1..=8);
            let mut t: Vec<usize> = (0..classes).flat_map(|c| std::iter::repeat_n(c, per)).collect();
            t.shuffle(&mut rng);
            let p = t.iter().map(|_| rng.gen_range(0..classes)).collect();
            (t, p)
        } else {
            let n = rng.gen_range(1..=60);
            let skew = rng.gen_range(0.0..1.0);
            let draw = |rng: &mut ChaCha8Rng| {
                if rng.gen_bool(skew) {
                    0
                } else {
                    rng.gen_range(0..classes)
                }
            };
            let t: Vec<usize> = (0..n).map(|_| draw(&mut rng)).collect();
            let p: Vec<usize> = t.iter().map(|&y| if rng.gen_bool(0.5) { y } else { draw(&mut rng) }).collect();
            (t, p)
        };
        let r = MetricReport::<f64>::from_labels(&t, &p, classes).map_err(|e| e.to_string())?;
        let (acc, mac, wei) = metric_oracle(&t, &p, classes);
        for (name, got, want) in [("accuracy", r.accuracy, acc), ("macro", r.macro_f1, mac), ("weighted", r.weighted_f1, wei)] {
            if !close(got, want, 1e-12) {
                return Err(format!("case {case} {name}: got {got} want {want}"));
            }
        }
        if r.support.windows(2).all(|w| w[0] == w[1]) {
            equal_cases += 1;
            if r.weighted_f1 != r.macro_f1 {
                return Err(format!("case {case}: weighted {} != macro {} with equal supports", r.weighted_f1, r.macro_f1));
            }
        }
    }
    Ok(format!("{cases} cases within 1e-12, {equal_cases} equal-support cases with weighted == macro"))
}

//! Structure encoder (two attention layers and mean pooling), statistics
//! encoder (two-layer MLP with dropout), fusion, and classifier.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{attention_backward, attention_forward, AttentionCache, Neighborhoods};
use super::NnError;
use crate::features::{node_features, MinMaxNormalizer, FEATURE_COUNT};
use crate::graph::Graph;
use crate::matrix::DenseMatrix;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureMode {
    Attention,
    /// Uniform weights over each closed neighborhood.
    MeanAggregation,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatMode {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    SoftmaxCe,
    SigmoidBce,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub hidden: usize,
    pub heads: usize,
    pub classes: usize,
    pub dropout: f64,
    pub leaky_slope: f64,
    pub structure: StructureMode,
    pub stat: StatMode,
    pub loss: LossMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            heads: 4,
            classes: 4,
            dropout: 0.5,
            leaky_slope: 0.2,
            structure: StructureMode::Attention,
            stat: StatMode::On,
            loss: LossMode::SoftmaxCe,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.structure == StructureMode::Off && self.stat == StatMode::Off {
            return Err(NnError::BothEncodersOff);
        }
        if self.hidden == 0 || self.heads == 0 || self.classes == 0 {
            return Err(NnError::InvalidConfig("hidden, heads and classes must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(NnError::InvalidConfig(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }

    pub fn uses_structure(&self) -> bool {
        self.structure != StructureMode::Off
    }

    pub fn uses_stat(&self) -> bool {
        self.stat == StatMode::On
    }

    pub fn classifier_input(&self) -> usize {
        self.hidden * (self.uses_structure() as usize + self.uses_stat() as usize)
    }
}

/// All trainable blocks. Layer 1 keeps its heads side by side in `w1`
/// (2 × H·h) with one attention row per head in `a1` (H × 2h).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ModelParams<T> {
    pub w1: DenseMatrix<T>,
    pub a1: DenseMatrix<T>,
    pub w2: DenseMatrix<T>,
    pub a2: DenseMatrix<T>,
    pub m1: DenseMatrix<T>,
    pub b1: DenseMatrix<T>,
    pub m2: DenseMatrix<T>,
    pub b2: DenseMatrix<T>,
    pub wc: DenseMatrix<T>,
    pub bc: DenseMatrix<T>,
}

pub const BLOCK_NAMES: [&str; 10] = ["w1", "a1", "w2", "a2", "m1", "b1", "m2", "b2", "wc", "bc"];

impl<T: Scalar> ModelParams<T> {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let (h, hh, c) = (cfg.hidden, cfg.hidden * cfg.heads, cfg.classes);
        Self {
            w1: DenseMatrix::zeros(2, hh),
            a1: DenseMatrix::zeros(cfg.heads, 2 * h),
            w2: DenseMatrix::zeros(hh, h),
            a2: DenseMatrix::zeros(1, 2 * h),
            m1: DenseMatrix::zeros(FEATURE_COUNT, h),
            b1: DenseMatrix::zeros(1, h),
            m2: DenseMatrix::zeros(h, h),
            b2: DenseMatrix::zeros(1, h),
            wc: DenseMatrix::zeros(cfg.classifier_input(), c),
            bc: DenseMatrix::zeros(1, c),
        }
    }

    /// Weights uniform in `±1/√fan_in`, biases zero.
    pub fn init<R: Rng>(cfg: &ModelConfig, rng: &mut R) -> Self {
        let mut p = Self::zeros(cfg);
        let h = cfg.hidden;
        let fill = |m: &mut DenseMatrix<T>, fan_in: usize, rng: &mut R| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            m.as_mut_slice()
                .iter_mut()
                .for_each(|x| *x = T::lit(rng.gen_range(-bound..=bound)));
        };
        fill(&mut p.w1, 2, rng);
        fill(&mut p.a1, 2 * h, rng);
        fill(&mut p.w2, h * cfg.heads, rng);
        fill(&mut p.a2, 2 * h, rng);
        fill(&mut p.m1, FEATURE_COUNT, rng);
        fill(&mut p.m2, h, rng);
        fill(&mut p.wc, cfg.classifier_input(), rng);
        p
    }

    pub fn blocks(&self) -> [&DenseMatrix<T>; 10] {
        [
            &self.w1, &self.a1, &self.w2, &self.a2, &self.m1, &self.b1, &self.m2, &self.b2, &self.wc, &self.bc,
        ]
    }

    pub fn blocks_mut(&mut self) -> [&mut DenseMatrix<T>; 10] {
        [
            &mut self.w1,
            &mut self.a1,
            &mut self.w2,
            &mut self.a2,
            &mut self.m1,
            &mut self.b1,
            &mut self.m2,
            &mut self.b2,
            &mut self.wc,
            &mut self.bc,
        ]
    }

    /// Which blocks influence the output under `cfg`.
    pub fn active(cfg: &ModelConfig) -> [bool; 10] {
        let s = cfg.uses_structure();
        let a = cfg.structure == StructureMode::Attention;
        let m = cfg.uses_stat();
        [s, a, s, a, m, m, m, m, true, true]
    }

    pub fn add_scaled(&mut self, other: &Self, s: T) {
        for (a, b) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (x, &y) in a.as_mut_slice().iter_mut().zip(b.as_slice()) {
                *x += s * y;
            }
        }
    }

    pub fn norm_sq(&self) -> T {
        self.blocks().iter().map(|b| b.frobenius_sq()).sum()
    }
}

/// One graph prepared for the structure encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInput<T> {
    /// Degree and core number per node, min-max scaled within the graph.
    pub x: DenseMatrix<T>,
    pub nb: Neighborhoods,
}

impl<T: Scalar> GraphInput<T> {
    pub fn from_graph(g: &Graph) -> Result<Self, NnError> {
        let raw = node_features::<T>(g).map_err(|_| NnError::EmptyGraph)?;
        Ok(Self {
            x: MinMaxNormalizer::fit(&raw).apply(&raw),
            nb: Neighborhoods::of(g),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Class(usize),
    Set(Vec<bool>),
}

/// Intermediate values kept for the backward pass.
pub struct ForwardCache<T> {
    h1: Option<(DenseMatrix<T>, AttentionCache<T>)>,
    g1: Option<DenseMatrix<T>>,
    c2: Option<AttentionCache<T>>,
    nodes: usize,
    u1: Vec<T>,
    mask: Vec<T>,
    d1: Vec<T>,
    u2: Vec<T>,
    pub fused: Vec<T>,
    pub logits: Vec<T>,
}

fn elu<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        x.exp_m1()
    }
}

fn relu<T: Scalar>(x: T) -> T {
    x.max(T::zero())
}

fn affine<T: Scalar>(x: &[T], w: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Vec<T> {
    let mut out = b.row(0).to_vec();
    for (i, &xi) in x.iter().enumerate() {
        for (o, &wij) in out.iter_mut().zip(w.row(i)) {
            *o += xi * wij;
        }
    }
    out
}

/// Pooled structure embedding `z_struct` (length h).
pub fn structure_embedding<T: Scalar>(cfg: &ModelConfig, p: &ModelParams<T>, g: &GraphInput<T>) -> Vec<T> {
    let slope = T::lit(cfg.leaky_slope);
    let attn = cfg.structure == StructureMode::Attention;
    let (h1, _) = attention_forward(&g.x, &g.nb, &p.w1, attn.then_some(&p.a1), cfg.heads, slope);
    let g1 = h1.map(elu);
    let (h2, _) = attention_forward(&g1, &g.nb, &p.w2, attn.then_some(&p.a2), 1, slope);
    h2.mean_rows()
}

/// Statistics embedding `z_stat`; `mask` holds the inverted-dropout
/// multipliers (1 when dropout is off).
pub fn stat_embedding<T: Scalar>(p: &ModelParams<T>, stats: &[T], mask: &[T]) -> Vec<T> {
    let r1: Vec<T> = affine(stats, &p.m1, &p.b1).into_iter().map(relu).collect();
    let d1: Vec<T> = r1.iter().zip(mask).map(|(&a, &m)| a * m).collect();
    affine(&d1, &p.m2, &p.b2).into_iter().map(relu).collect()
}

/// `[z_struct ‖ z_stat] · Wc + bc`.
pub fn fuse_and_classify<T: Scalar>(p: &ModelParams<T>, z_struct: &[T], z_stat: &[T]) -> Vec<T> {
    let fused: Vec<T> = z_struct.iter().chain(z_stat).copied().collect();
    affine(&fused, &p.wc, &p.bc)
}

/// Draws an inverted-dropout mask of length `h`.
pub fn dropout_mask<T: Scalar, R: Rng>(h: usize, rate: f64, rng: &mut R) -> Vec<T> {
    if rate <= 0.0 {
        return vec![T::one(); h];
    }
    let keep = T::lit(1.0 / (1.0 - rate));
    (0..h)
        .map(|_| if rng.gen::<f64>() < rate { T::zero() } else { keep })
        .collect()
}

pub fn forward<T: Scalar>(
    cfg: &ModelConfig,
    p: &ModelParams<T>,
    g: &GraphInput<T>,
    stats: &[T],
    mask: Option<&[T]>,
) -> ForwardCache<T> {
    let slope = T::lit(cfg.leaky_slope);
    let attn = cfg.structure == StructureMode::Attention;
    let mut fused = Vec::with_capacity(cfg.classifier_input());
    let mut cache = ForwardCache {
        h1: None,
        g1: None,
        c2: None,
        nodes: g.nb.nodes(),
        u1: Vec::new(),
        mask: Vec::new(),
        d1: Vec::new(),
        u2: Vec::new(),
        fused: Vec::new(),
        logits: Vec::new(),
    };
    if cfg.uses_structure() {
        let (h1, c1) = attention_forward(&g.x, &g.nb, &p.w1, attn.then_some(&p.a1), cfg.heads, slope);
        let g1 = h1.map(elu);
        let (h2, c2) = attention_forward(&g1, &g.nb, &p.w2, attn.then_some(&p.a2), 1, slope);
        fused.extend(h2.mean_rows());
        cache.h1 = Some((h1, c1));
        cache.g1 = Some(g1);
        cache.c2 = Some(c2);
    }
    if cfg.uses_stat() {
        let u1 = affine(stats, &p.m1, &p.b1);
        let mask = mask.map_or_else(|| vec![T::one(); cfg.hidden], <[T]>::to_vec);
        let d1: Vec<T> = u1.iter().zip(&mask).map(|(&a, &m)| relu(a) * m).collect();
        let u2 = affine(&d1, &p.m2, &p.b2);
        fused.extend(u2.iter().map(|&v| relu(v)));
        cache.u1 = u1;
        cache.mask = mask;
        cache.d1 = d1;
        cache.u2 = u2;
    }
    cache.logits = affine(&fused, &p.wc, &p.bc);
    cache.fused = fused;
    cache
}

/// Accumulates into `grad` the gradient of a loss whose derivative with
/// respect to the logits is `dlogits`.
pub fn backward<T: Scalar>(
    cfg: &ModelConfig,
    p: &ModelParams<T>,
    g: &GraphInput<T>,
    stats: &[T],
    cache: &ForwardCache<T>,
    dlogits: &[T],
    grad: &mut ModelParams<T>,
) {
    let h = cfg.hidden;
    for (i, &f) in cache.fused.iter().enumerate() {
        for (gw, &dl) in grad.wc.row_mut(i).iter_mut().zip(dlogits) {
            *gw += f * dl;
        }
    }
    for (gb, &dl) in grad.bc.row_mut(0).iter_mut().zip(dlogits) {
        *gb += dl;
    }
    let dfused: Vec<T> = (0..cache.fused.len())
        .map(|i| p.wc.row(i).iter().zip(dlogits).map(|(&w, &d)| w * d).sum())
        .collect();
    let mut offset = 0;
    if cfg.uses_structure() {
        let slope = T::lit(cfg.leaky_slope);
        let attn = cfg.structure == StructureMode::Attention;
        let (h1, c1) = cache.h1.as_ref().expect("structure cache");
        let g1 = cache.g1.as_ref().expect("structure cache");
        let c2 = cache.c2.as_ref().expect("structure cache");
        let n = T::from_count(cache.nodes);
        let dpool: Vec<T> = dfused[..h].iter().map(|&d| d / n).collect();
        let dh2 = DenseMatrix::from_fn(cache.nodes, h, |_, j| dpool[j]);
        let l2 = attention_backward(g1, &g.nb, &p.w2, attn.then_some(&p.a2), 1, slope, c2, &dh2);
        grad.w2.add_assign(&l2.dw);
        if let Some(da) = l2.da {
            grad.a2.add_assign(&da);
        }
        let mut dh1 = l2.dx;
        for (d, &x) in dh1.as_mut_slice().iter_mut().zip(h1.as_slice()) {
            if x <= T::zero() {
                *d *= x.exp();
            }
        }
        let l1 = attention_backward(&g.x, &g.nb, &p.w1, attn.then_some(&p.a1), cfg.heads, slope, c1, &dh1);
        grad.w1.add_assign(&l1.dw);
        if let Some(da) = l1.da {
            grad.a1.add_assign(&da);
        }
        offset = h;
    }
    if cfg.uses_stat() {
        let du2: Vec<T> = dfused[offset..offset + h]
            .iter()
            .zip(&cache.u2)
            .map(|(&d, &u)| if u > T::zero() { d } else { T::zero() })
            .collect();
        for (i, &x) in cache.d1.iter().enumerate() {
            for (gw, &d) in grad.m2.row_mut(i).iter_mut().zip(&du2) {
                *gw += x * d;
            }
        }
        for (gb, &d) in grad.b2.row_mut(0).iter_mut().zip(&du2) {
            *gb += d;
        }
        let du1: Vec<T> = (0..h)
            .map(|i| {
                let dd1: T = p.m2.row(i).iter().zip(&du2).map(|(&w, &d)| w * d).sum();
                if cache.u1[i] > T::zero() {
                    dd1 * cache.mask[i]
                } else {
                    T::zero()
                }
            })
            .collect();
        for (i, &x) in stats.iter().enumerate() {
            for (gw, &d) in grad.m1.row_mut(i).iter_mut().zip(&du1) {
                *gw += x * d;
            }
        }
        for (gb, &d) in grad.b1.row_mut(0).iter_mut().zip(&du1) {
            *gb += d;
        }
    }
}

/// Loss of one instance and its gradient with respect to the logits.
/// Softmax mode uses cross-entropy on a class index; sigmoid mode the mean
/// binary cross-entropy over the outputs.
pub fn loss_and_grad<T: Scalar>(logits: &[T], target: &Target, mode: LossMode) -> Result<(T, Vec<T>), NnError> {
    match (mode, target) {
        (LossMode::SoftmaxCe, Target::Class(c)) => {
            if *c >= logits.len() {
                return Err(NnError::ModeMismatch);
            }
            let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
            let sum: T = logits.iter().map(|&z| (z - max).exp()).sum();
            let lse = max + sum.ln();
            let grad = logits
                .iter()
                .enumerate()
                .map(|(i, &z)| (z - lse).exp() - if i == *c { T::one() } else { T::zero() })
                .collect();
            Ok((lse - logits[*c], grad))
        }
        (LossMode::SigmoidBce, Target::Set(s)) if s.len() == logits.len() => {
            let k = T::from_count(logits.len());
            let mut loss = T::zero();
            let mut grad = Vec::with_capacity(logits.len());
            for (&z, &y) in logits.iter().zip(s) {
                let y = if y { T::one() } else { T::zero() };
                loss += z.max(T::zero()) - y * z + (-z.abs()).exp().ln_1p();
                let sig = T::one() / (T::one() + (-z).exp());
                grad.push((sig - y) / k);
            }
            Ok((loss / k, grad))
        }
        _ => Err(NnError::ModeMismatch),
    }
}

/// Mean loss over a batch.
pub fn batch_loss<T: Scalar>(logits: &[Vec<T>], targets: &[Target], mode: LossMode) -> Result<T, NnError> {
    let mut total = T::zero();
    for (l, t) in logits.iter().zip(targets) {
        total += loss_and_grad(l, t, mode)?.0;
    }
    Ok(total / T::from_count(logits.len().max(1)))
}

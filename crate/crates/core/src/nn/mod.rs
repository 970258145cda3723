//! Dual-channel selector: graph attention over node features fused with an
//! MLP over the global features, trained with AdamW and early stopping.

mod gradcheck;
pub mod layers;
pub mod model;

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetVariant, LabeledInstance};
use crate::graph::{read_graph_file, Graph};
use crate::solvers::SolverId;
use crate::features::ZScoreNormalizer;
use crate::matrix::DenseMatrix;
use crate::metrics::{evaluate_variant, Labels};
use crate::Scalar;

pub use gradcheck::{gradcheck, BlockError, GradcheckReport};
pub use model::{
    backward, batch_loss, dropout_mask, forward, fuse_and_classify, loss_and_grad, stat_embedding,
    structure_embedding, GraphInput, LossMode, ModelConfig, ModelParams, StatMode, StructureMode, Target,
    BLOCK_NAMES,
};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("no training samples")]
    EmptyData,
    #[error("training targets contain a single class")]
    SingleClass,
    #[error("both encoders are switched off")]
    BothEncodersOff,
    #[error("target layout does not match the loss mode")]
    ModeMismatch,
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Format(String),
    #[error("graph {id}: {reason}")]
    Graph { id: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Epochs without validation improvement tolerated before stopping.
    pub patience: usize,
    /// Share of the training samples held out for early stopping. When it
    /// rounds down to zero rows, the training samples are monitored instead.
    pub val_fraction: f64,
    pub seed: u64,
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            weight_decay: 1e-4,
            batch_size: 16,
            epochs: 50,
            patience: 10,
            val_fraction: 0.1,
            seed: 0,
            model: ModelConfig::default(),
        }
    }
}

/// The four encoder combinations compared in the ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ablation {
    MlpOnly,
    GcnOnly,
    GatOnly,
    GatMlp,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [Self::MlpOnly, Self::GcnOnly, Self::GatOnly, Self::GatMlp];

    pub fn name(self) -> &'static str {
        match self {
            Self::MlpOnly => "MLP-Only",
            Self::GcnOnly => "GCN-Only",
            Self::GatOnly => "GAT-Only",
            Self::GatMlp => "GAT-MLP",
        }
    }

    pub fn apply(self, cfg: &ModelConfig) -> ModelConfig {
        let (structure, stat) = match self {
            Self::MlpOnly => (StructureMode::Off, StatMode::On),
            Self::GcnOnly => (StructureMode::MeanAggregation, StatMode::Off),
            Self::GatOnly => (StructureMode::Attention, StatMode::Off),
            Self::GatMlp => (StructureMode::Attention, StatMode::On),
        };
        ModelConfig { structure, stat, ..*cfg }
    }
}

/// One training or evaluation instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub graph: GraphInput<T>,
    /// Raw global features; the model normalizes them.
    pub stats: Vec<T>,
    pub target: Target,
}


impl LossMode {
    /// Softmax for single-label variants, per-solver sigmoids for Method3.
    pub fn for_variant(v: DatasetVariant) -> Self {
        match v {
            DatasetVariant::Method3 => LossMode::SigmoidBce,
            _ => LossMode::SoftmaxCe,
        }
    }
}

fn target_of<T: Scalar>(inst: &LabeledInstance<T>, variant: DatasetVariant) -> Target {
    match variant {
        DatasetVariant::Method3 => Target::Set(SolverId::ALL.iter().map(|s| inst.winners.contains(s)).collect()),
        _ => Target::Class(inst.label().index()),
    }
}

pub fn sample_from<T: Scalar>(g: &Graph, inst: &LabeledInstance<T>, variant: DatasetVariant) -> Result<Sample<T>, NnError> {
    Ok(Sample {
        graph: GraphInput::from_graph(g)?,
        stats: inst.features.to_vector().to_vec(),
        target: target_of(inst, variant),
    })
}

/// Samples for `data`, reading each graph once from `dir/<instance_id>.clq`.
pub fn samples_from_dir<T: Scalar>(
    dir: &Path,
    data: &[LabeledInstance<T>],
    variant: DatasetVariant,
) -> Result<Vec<Sample<T>>, NnError> {
    let mut inputs: BTreeMap<&str, GraphInput<T>> = BTreeMap::new();
    let mut out = Vec::with_capacity(data.len());
    for inst in data {
        if !inputs.contains_key(inst.instance_id.as_str()) {
            let path = dir.join(format!("{}.clq", inst.instance_id));
            let g = read_graph_file(&path).map_err(|e| NnError::Graph {
                id: inst.instance_id.clone(),
                reason: e.to_string(),
            })?;
            inputs.insert(&inst.instance_id, GraphInput::from_graph(&g)?);
        }
        out.push(Sample {
            graph: inputs[inst.instance_id.as_str()].clone(),
            stats: inst.features.to_vector().to_vec(),
            target: target_of(inst, variant),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
    pub val_macro_f1: f64,
}

pub fn write_log<W: io::Write>(w: W, rows: &[LogRow]) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["epoch", "train_loss", "val_accuracy", "val_macro_f1"])?;
    for r in rows {
        out.write_record([
            r.epoch.to_string(),
            format!("{:.8}", r.train_loss),
            format!("{:.6}", r.val_accuracy),
            format!("{:.6}", r.val_macro_f1),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GatModel<T> {
    pub config: ModelConfig,
    pub train: TrainConfig,
    pub stat_norm: ZScoreNormalizer<T>,
    pub params: ModelParams<T>,
}

pub const CHECKPOINT_FORMAT: &str = "cliquesel-gat";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct Checkpoint<T> {
    format: String,
    version: u32,
    variant: Option<DatasetVariant>,
    model: GatModel<T>,
}

impl<T: Scalar> GatModel<T> {
    fn normalized(&self, stats: &[T]) -> Vec<T> {
        let mut s = stats.to_vec();
        self.stat_norm.apply_row(&mut s);
        s
    }

    pub fn logits(&self, graph: &GraphInput<T>, stats: &[T]) -> Vec<T> {
        forward(&self.config, &self.params, graph, &self.normalized(stats), None).logits
    }

    /// Highest logit; ties go to the lowest index.
    pub fn predict_class(&self, graph: &GraphInput<T>, stats: &[T]) -> usize {
        argmax(&self.logits(graph, stats))
    }

    /// Outputs with positive logit; with none, the highest one alone.
    pub fn predict_set(&self, graph: &GraphInput<T>, stats: &[T]) -> Vec<bool> {
        let l = self.logits(graph, stats);
        let pos: Vec<bool> = l.iter().map(|&z| z > T::zero()).collect();
        crate::classical::combine_binary(&pos, &l)
    }

    /// Predictions in the layout the metrics expect for the loss mode.
    pub fn predict_labels(&self, samples: &[Sample<T>]) -> Labels {
        match self.config.loss {
            LossMode::SoftmaxCe => Labels::Single(samples.iter().map(|s| self.predict_class(&s.graph, &s.stats)).collect()),
            LossMode::SigmoidBce => Labels::Sets(
                samples
                    .iter()
                    .map(|s| to4(&self.predict_set(&s.graph, &s.stats)))
                    .collect(),
            ),
        }
    }

    pub fn to_json(&self, variant: Option<DatasetVariant>) -> String {
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.to_owned(),
            version: CHECKPOINT_VERSION,
            variant,
            model: self.clone(),
        };
        serde_json::to_string(&ck).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<(Self, Option<DatasetVariant>), NnError> {
        let ck: Checkpoint<T> = serde_json::from_str(text).map_err(|e| NnError::Format(e.to_string()))?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(NnError::Format(format!("unsupported checkpoint {} v{}", ck.format, ck.version)));
        }
        Ok((ck.model, ck.variant))
    }
}

fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

/// Mean loss and gradient over a batch of `(sample, normalized stats,
/// dropout mask)`. Per-sample work runs in parallel; gradients are summed
/// in batch order.
pub fn batch_gradient<T: Scalar>(
    cfg: &ModelConfig,
    p: &ModelParams<T>,
    batch: &[(&Sample<T>, Vec<T>, Option<Vec<T>>)],
) -> Result<(T, ModelParams<T>), NnError> {
    let parts: Vec<Result<(T, ModelParams<T>), NnError>> = batch
        .par_iter()
        .map(|(s, stats, mask)| {
            let cache = forward(cfg, p, &s.graph, stats, mask.as_deref());
            let (loss, dl) = loss_and_grad(&cache.logits, &s.target, cfg.loss)?;
            let mut g = ModelParams::zeros(cfg);
            backward(cfg, p, &s.graph, stats, &cache, &dl, &mut g);
            Ok((loss, g))
        })
        .collect();
    let scale = T::one() / T::from_count(batch.len().max(1));
    let mut total = ModelParams::zeros(cfg);
    let mut loss = T::zero();
    for part in parts {
        let (l, g) = part?;
        loss += l;
        total.add_scaled(&g, scale);
    }
    Ok((loss * scale, total))
}

struct AdamW<T> {
    m: ModelParams<T>,
    v: ModelParams<T>,
    t: i32,
}

impl<T: Scalar> AdamW<T> {
    fn new(cfg: &ModelConfig) -> Self {
        Self {
            m: ModelParams::zeros(cfg),
            v: ModelParams::zeros(cfg),
            t: 0,
        }
    }

    /// Adam step with weight decay applied directly to the parameters.
    fn step(&mut self, p: &mut ModelParams<T>, g: &ModelParams<T>, lr: f64, wd: f64) {
        let (b1, b2, eps) = (T::lit(0.9), T::lit(0.999), T::lit(1e-8));
        self.t += 1;
        let c1 = T::one() - b1.powi(self.t);
        let c2 = T::one() - b2.powi(self.t);
        let (lr, wd) = (T::lit(lr), T::lit(wd));
        let blocks = p
            .blocks_mut()
            .into_iter()
            .zip(g.blocks())
            .zip(self.m.blocks_mut().into_iter().zip(self.v.blocks_mut()));
        for ((pb, gb), (mb, vb)) in blocks {
            let it = pb
                .as_mut_slice()
                .iter_mut()
                .zip(gb.as_slice())
                .zip(mb.as_mut_slice().iter_mut().zip(vb.as_mut_slice()));
            for ((x, &gr), (m, v)) in it {
                *m = b1 * *m + (T::one() - b1) * gr;
                *v = b2 * *v + (T::one() - b2) * gr * gr;
                let update = (*m / c1) / ((*v / c2).sqrt() + eps);
                *x -= lr * (update + wd * *x);
            }
        }
    }
}

fn distinct_targets<T>(samples: &[&Sample<T>]) -> usize {
    let mut seen: Vec<&Target> = Vec::new();
    for s in samples {
        if !seen.contains(&&s.target) {
            seen.push(&s.target);
        }
    }
    seen.len()
}

/// Accuracy and macro F1 of `model` on `samples`.
pub fn score<T: Scalar>(model: &GatModel<T>, samples: &[&Sample<T>]) -> Result<(f64, f64), NnError> {
    if samples.is_empty() {
        return Ok((0.0, 0.0));
    }
    let r = match model.config.loss {
        LossMode::SoftmaxCe => {
            let mut truth = Vec::new();
            let mut pred = Vec::new();
            for s in samples {
                let Target::Class(c) = s.target else {
                    return Err(NnError::ModeMismatch);
                };
                truth.push(c);
                pred.push(model.predict_class(&s.graph, &s.stats));
            }
            evaluate_variant::<f64>("gat", DatasetVariant::Method2, &Labels::Single(truth), &Labels::Single(pred))
        }
        LossMode::SigmoidBce => {
            let mut truth = Vec::new();
            let mut pred = Vec::new();
            for s in samples {
                let Target::Set(set) = &s.target else {
                    return Err(NnError::ModeMismatch);
                };
                truth.push(to4(set));
                pred.push(to4(&model.predict_set(&s.graph, &s.stats)));
            }
            evaluate_variant::<f64>("gat", DatasetVariant::Method3, &Labels::Sets(truth), &Labels::Sets(pred))
        }
    };
    let r = r.map_err(|e| NnError::InvalidConfig(e.to_string()))?;
    Ok((r.accuracy, r.macro_f1))
}

fn to4(s: &[bool]) -> [bool; 4] {
    let mut out = [false; 4];
    for (o, &b) in out.iter_mut().zip(s) {
        *o = b;
    }
    out
}

/// Trains from scratch and returns the checkpoint with the best validation
/// macro F1 together with the per-epoch log.
pub fn train<T: Scalar>(samples: &[Sample<T>], cfg: &TrainConfig) -> Result<(GatModel<T>, Vec<LogRow>), NnError> {
    cfg.model.validate()?;
    if samples.is_empty() {
        return Err(NnError::EmptyData);
    }
    if cfg.batch_size == 0 {
        return Err(NnError::InvalidConfig("batch size must be positive".into()));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut split_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    order.shuffle(&mut split_rng);
    let n_val = (cfg.val_fraction * samples.len() as f64).floor() as usize;
    let n_val = n_val.min(samples.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let train_set: Vec<&Sample<T>> = train_idx.iter().map(|&i| &samples[i]).collect();
    let val_set: Vec<&Sample<T>> = if val_idx.is_empty() {
        train_set.clone()
    } else {
        val_idx.iter().map(|&i| &samples[i]).collect()
    };
    if distinct_targets(&train_set) < 2 {
        return Err(NnError::SingleClass);
    }
    let stats = DenseMatrix::from_rows(&train_set.iter().map(|s| s.stats.clone()).collect::<Vec<_>>())
        .map_err(|e| NnError::InvalidConfig(e.to_string()))?;
    let stat_norm = crate::classical::fit_zscore(&stats);
    let normalized: Vec<Vec<T>> = train_set
        .iter()
        .map(|s| {
            let mut v = s.stats.clone();
            stat_norm.apply_row(&mut v);
            v
        })
        .collect();

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    init_rng.set_stream(1);
    let mut model = GatModel {
        config: cfg.model,
        train: *cfg,
        stat_norm,
        params: ModelParams::init(&cfg.model, &mut init_rng),
    };
    let mut batch_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    batch_rng.set_stream(2);
    let mut drop_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    drop_rng.set_stream(3);
    let mut opt = AdamW::new(&cfg.model);
    let mut best: Option<(f64, ModelParams<T>)> = None;
    let mut wait = 0;
    let mut log = Vec::new();
    let mut idx: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=cfg.epochs {
        idx.shuffle(&mut batch_rng);
        let mut loss_sum = 0.0;
        for chunk in idx.chunks(cfg.batch_size) {
            let batch: Vec<(&Sample<T>, Vec<T>, Option<Vec<T>>)> = chunk
                .iter()
                .map(|&i| {
                    let mask = cfg
                        .model
                        .uses_stat()
                        .then(|| dropout_mask(cfg.model.hidden, cfg.model.dropout, &mut drop_rng));
                    (train_set[i], normalized[i].clone(), mask)
                })
                .collect();
            let (loss, grad) = batch_gradient(&cfg.model, &model.params, &batch)?;
            loss_sum += loss.as_f64() * chunk.len() as f64;
            opt.step(&mut model.params, &grad, cfg.lr, cfg.weight_decay);
        }
        let (val_accuracy, val_macro_f1) = score(&model, &val_set)?;
        log.push(LogRow {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            val_accuracy,
            val_macro_f1,
        });
        if best.as_ref().is_none_or(|(f, _)| val_macro_f1 > *f) {
            best = Some((val_macro_f1, model.params.clone()));
            wait = 0;
        } else {
            wait += 1;
            if wait > cfg.patience {
                break;
            }
        }
    }
    if let Some((_, params)) = best {
        model.params = params;
    }
    Ok((model, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::extract_global;
    use crate::graph::Graph;

    fn sample(g: &Graph, c: usize) -> Sample<f64> {
        Sample {
            graph: GraphInput::from_graph(g).unwrap(),
            stats: extract_global::<f64>(g).unwrap().to_vector().to_vec(),
            target: Target::Class(c),
        }
    }

    fn toy() -> Vec<Sample<f64>> {
        let mut v = Vec::new();
        for n in 4..8 {
            v.push(sample(&Graph::complete(n), 0));
            v.push(sample(&Graph::cycle(n + 2), 1));
        }
        v
    }

    #[test]
    fn same_seed_same_parameters() {
        let cfg = TrainConfig {
            epochs: 5,
            ..TrainConfig::default()
        };
        let (a, la) = train(&toy(), &cfg).unwrap();
        let (b, lb) = train(&toy(), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
    }

    #[test]
    fn zero_patience_stops_after_first_miss() {
        let cfg = TrainConfig {
            epochs: 50,
            patience: 0,
            lr: 0.0,
            ..TrainConfig::default()
        };
        let (_, log) = train(&toy(), &cfg).unwrap();
        assert_eq!(log.len(), 2);
    }

    #[test]
    fn best_checkpoint_is_kept() {
        let cfg = TrainConfig {
            epochs: 30,
            val_fraction: 0.25,
            ..TrainConfig::default()
        };
        let (m, log) = train(&toy(), &cfg).unwrap();
        let best = log.iter().map(|r| r.val_macro_f1).fold(f64::MIN, f64::max);
        let mut order: Vec<usize> = (0..8).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
        let data = toy();
        let val: Vec<&Sample<f64>> = order[..2].iter().map(|&i| &data[i]).collect();
        assert_eq!(score(&m, &val).unwrap().1, best);
    }

    #[test]
    fn single_class_rejected() {
        let data: Vec<_> = (3..7).map(|n| sample(&Graph::complete(n), 2)).collect();
        assert!(matches!(train(&data, &TrainConfig::default()), Err(NnError::SingleClass)));
        assert!(matches!(train::<f64>(&[], &TrainConfig::default()), Err(NnError::EmptyData)));
    }

    #[test]
    fn both_off_rejected() {
        let mut cfg = TrainConfig::default();
        cfg.model.structure = StructureMode::Off;
        cfg.model.stat = StatMode::Off;
        assert!(matches!(train(&toy(), &cfg), Err(NnError::BothEncodersOff)));
    }

    #[test]
    fn checkpoint_round_trip() {
        let cfg = TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        };
        let (m, _) = train(&toy(), &cfg).unwrap();
        let (back, variant) = GatModel::<f64>::from_json(&m.to_json(Some(DatasetVariant::Method2))).unwrap();
        assert_eq!(back, m);
        assert_eq!(variant, Some(DatasetVariant::Method2));
    }

    #[test]
    fn ablation_modes() {
        let base = ModelConfig::default();
        assert_eq!(Ablation::MlpOnly.apply(&base).classifier_input(), 32);
        assert_eq!(Ablation::GcnOnly.apply(&base).structure, StructureMode::MeanAggregation);
        assert_eq!(Ablation::GatMlp.apply(&base).classifier_input(), 64);
    }
}

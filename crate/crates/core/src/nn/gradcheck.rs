//! Finite-difference check of the analytic gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::model::{backward, forward, loss_and_grad, GraphInput, LossMode, ModelConfig, ModelParams, Target, BLOCK_NAMES};
use super::NnError;
use crate::dataset::corpus::erdos_renyi;
use crate::features::FEATURE_COUNT;

const STEP: f64 = 1e-5;
const GRAPH_NODES: usize = 6;
const BATCH: usize = 2;

#[derive(Debug, Clone, Serialize)]
pub struct BlockError {
    pub block: &'static str,
    pub params: usize,
    /// `‖analytic − numeric‖ / (‖analytic‖ + ‖numeric‖)`, 0 when both vanish.
    pub rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckReport {
    pub seed: u64,
    pub blocks: Vec<BlockError>,
}

impl GradcheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.blocks.iter().map(|b| b.rel_error).fold(0.0, f64::max)
    }
}

type Batch = Vec<(GraphInput<f64>, Vec<f64>, Target)>;

fn mean_loss(cfg: &ModelConfig, p: &ModelParams<f64>, batch: &Batch) -> Result<f64, NnError> {
    let mut total = 0.0;
    for (g, s, t) in batch {
        let c = forward(cfg, p, g, s, None);
        total += loss_and_grad(&c.logits, t, cfg.loss)?.0;
    }
    Ok(total / batch.len() as f64)
}

/// Compares backpropagated gradients with central differences on a random
/// batch of small graphs, dropout off, for every block `cfg` uses.
pub fn gradcheck(seed: u64, cfg: &ModelConfig) -> Result<GradcheckReport, NnError> {
    cfg.validate()?;
    let cfg = ModelConfig { dropout: 0.0, ..*cfg };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut batch: Batch = Vec::with_capacity(BATCH);
    for _ in 0..BATCH {
        let g = erdos_renyi(GRAPH_NODES, 0.5, &mut rng);
        let stats: Vec<f64> = (0..FEATURE_COUNT).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let target = match cfg.loss {
            LossMode::SoftmaxCe => Target::Class(rng.gen_range(0..cfg.classes)),
            LossMode::SigmoidBce => Target::Set((0..cfg.classes).map(|_| rng.gen_bool(0.5)).collect()),
        };
        batch.push((GraphInput::from_graph(&g)?, stats, target));
    }
    let mut p = ModelParams::init(&cfg, &mut rng);
    // Nonzero biases keep the check away from the ReLU kink at zero.
    for b in [&mut p.b1, &mut p.b2, &mut p.bc] {
        b.as_mut_slice().iter_mut().for_each(|x| *x = rng.gen_range(-0.5..0.5));
    }

    let mut analytic = ModelParams::zeros(&cfg);
    for (g, s, t) in &batch {
        let c = forward(&cfg, &p, g, s, None);
        let (_, dl) = loss_and_grad(&c.logits, t, cfg.loss)?;
        let scaled: Vec<f64> = dl.iter().map(|v| v / batch.len() as f64).collect();
        backward(&cfg, &p, g, s, &c, &scaled, &mut analytic);
    }

    let active = ModelParams::<f64>::active(&cfg);
    let mut blocks = Vec::new();
    for (bi, name) in BLOCK_NAMES.iter().enumerate() {
        if !active[bi] {
            continue;
        }
        let len = p.blocks()[bi].as_slice().len();
        let mut diff = 0.0;
        let mut na = 0.0;
        let mut nn = 0.0;
        for k in 0..len {
            let orig = p.blocks()[bi].as_slice()[k];
            p.blocks_mut()[bi].as_mut_slice()[k] = orig + STEP;
            let up = mean_loss(&cfg, &p, &batch)?;
            p.blocks_mut()[bi].as_mut_slice()[k] = orig - STEP;
            let down = mean_loss(&cfg, &p, &batch)?;
            p.blocks_mut()[bi].as_mut_slice()[k] = orig;
            let num = (up - down) / (2.0 * STEP);
            let ana = analytic.blocks()[bi].as_slice()[k];
            diff += (ana - num) * (ana - num);
            na += ana * ana;
            nn += num * num;
        }
        let denom = na.sqrt() + nn.sqrt();
        let rel_error = if denom < 1e-12 { 0.0 } else { diff.sqrt() / denom };
        blocks.push(BlockError {
            block: name,
            params: len,
            rel_error,
        });
    }
    Ok(GradcheckReport { seed, blocks })
}

//! Run configuration read from a TOML file. Command-line flags win over
//! file values, which win over built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    /// Default graph directory for `features`, `solve` and `build`.
    pub corpus_dir: Option<PathBuf>,
    pub budget_s: Option<f64>,
    pub tie_epsilon: Option<f64>,
    pub variant: Option<String>,
    pub model: Option<String>,
    pub ratio: Option<f64>,
    #[serde(default)]
    pub train: TrainOverrides,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOverrides {
    pub lr: Option<f64>,
    pub weight_decay: Option<f64>,
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub patience: Option<usize>,
    pub val_fraction: Option<f64>,
    pub hidden: Option<usize>,
    pub heads: Option<usize>,
    pub dropout: Option<f64>,
    pub folds: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> anyhow::Result<()> {
        if let Some(dir) = &self.corpus_dir {
            anyhow::ensure!(dir.is_dir(), "corpus_dir {} does not exist", dir.display());
        }
        if let Some(b) = self.budget_s {
            anyhow::ensure!(b.is_finite() && b > 0.0, "budget_s must be positive");
        }
        if let Some(e) = self.tie_epsilon {
            anyhow::ensure!(e.is_finite() && e >= 0.0, "tie_epsilon must be non-negative");
        }
        if let Some(r) = self.ratio {
            anyhow::ensure!(r > 0.0 && r < 1.0, "ratio must lie strictly between 0 and 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_file() {
        let cfg: RunConfig = toml::from_str(
            r#"
            seed = 7
            jobs = 2
            budget_s = 2.5
            variant = "m3"
            [train]
            epochs = 5
            hidden = 8
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.train.epochs, Some(5));
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<RunConfig>("sed = 1").is_err());
    }

    #[test]
    fn rejects_bad_ratio() {
        let cfg: RunConfig = toml::from_str("ratio = 1.5").unwrap();
        assert!(cfg.validate().is_err());
    }
}

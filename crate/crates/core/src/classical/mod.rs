//! Decision tree, random forest, k-nearest-neighbors and linear SVM
//! selectors, stratified grid-search cross-validation, and the per-solver
//! binary combination used for multi-label data.

pub mod forest;
pub mod knn;
pub mod svm;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{feature_matrix, DatasetVariant, LabeledInstance};
use crate::metrics::Labels;
use crate::solvers::SolverId;
use crate::features::{ZScoreNormalizer, FEATURE_NAMES};
use crate::matrix::DenseMatrix;
use crate::Scalar;

pub use forest::{fit_forest, ForestModel, ForestParams};
pub use knn::{fit_knn, KnnModel};
pub use svm::{fit_svm, LinearSvmModel, SvmParams};
pub use tree::{fit_tree, gini, TreeModel, TreeParams};

#[derive(Debug, Error)]
pub enum ClassicalError {
    #[error("no training rows")]
    EmptyData,
    #[error("feature matrix contains a non-finite value")]
    NonFiniteFeature,
    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("label {label} outside 0..{classes}")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("k = {k} exceeds the {n} training rows")]
    KTooLarge { k: usize, n: usize },
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("need at least {needed} instances, got {got}")]
    TooFewInstances { needed: usize, got: usize },
    #[error("model has not been fitted")]
    UnfitModel,
    #[error("invalid hyperparameters: {0}")]
    InvalidParams(String),
    #[error("model file: {0}")]
    Format(String),
}

pub(crate) fn check_fit_inputs<T: Scalar>(x: &DenseMatrix<T>, y: &[usize], classes: usize) -> Result<(), ClassicalError> {
    if x.rows() == 0 {
        return Err(ClassicalError::EmptyData);
    }
    if x.rows() != y.len() {
        return Err(ClassicalError::LengthMismatch {
            rows: x.rows(),
            labels: y.len(),
        });
    }
    if let Some(&label) = y.iter().find(|&&l| l >= classes) {
        return Err(ClassicalError::LabelOutOfRange { label, classes });
    }
    if !x.is_finite() {
        return Err(ClassicalError::NonFiniteFeature);
    }
    Ok(())
}

/// Z-score statistics; a single row maps every feature to 0.
pub(crate) fn fit_zscore<T: Scalar>(x: &DenseMatrix<T>) -> ZScoreNormalizer<T> {
    ZScoreNormalizer::fit(x).unwrap_or_else(|_| ZScoreNormalizer {
        mean: x.mean_rows(),
        std: vec![T::zero(); x.cols()],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Dt,
    Rf,
    Knn,
    Svm,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 4] = [Self::Dt, Self::Rf, Self::Knn, Self::Svm];

    pub fn name(self) -> &'static str {
        match self {
            Self::Dt => "dt",
            Self::Rf => "rf",
            Self::Knn => "knn",
            Self::Svm => "svm",
        }
    }

    /// Default search grid, in declaration order.
    pub fn default_grid(self, seed: u64) -> Vec<Hyper> {
        match self {
            Self::Dt => {
                let mut g = Vec::new();
                for max_depth in [Some(3), Some(5), Some(8), None] {
                    for min_samples_leaf in [1, 3, 5] {
                        g.push(Hyper::Tree(TreeParams {
                            max_depth,
                            min_samples_leaf,
                            max_features: None,
                        }));
                    }
                }
                g
            }
            Self::Rf => [50, 100, 200]
                .map(|n_trees| {
                    Hyper::Forest(ForestParams {
                        n_trees,
                        seed,
                        ..ForestParams::default()
                    })
                })
                .to_vec(),
            Self::Knn => [1, 3, 5, 7].map(|k| Hyper::Knn { k }).to_vec(),
            Self::Svm => [0.1, 1.0, 10.0]
                .map(|c| {
                    Hyper::Svm(SvmParams {
                        c,
                        seed,
                        ..SvmParams::default()
                    })
                })
                .to_vec(),
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = ClassicalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ClassicalError::InvalidParams(format!("unknown model family {s:?}")))
    }
}

/// One hyperparameter assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Hyper {
    Tree(TreeParams),
    Forest(ForestParams),
    Knn { k: usize },
    Svm(SvmParams),
}

/// A fitted classifier of any family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", tag = "kind", rename_all = "lowercase")]
pub enum Selector<T> {
    Tree(TreeModel<T>),
    Forest(ForestModel<T>),
    Knn(KnnModel<T>),
    Svm(LinearSvmModel<T>),
    /// Training labels held a single class.
    Constant { class: usize, classes: usize },
}

/// Fits the family named by `hyper`. Single-class training labels give a
/// constant predictor for every family.
pub fn fit_selector<T: Scalar>(
    x: &DenseMatrix<T>,
    y: &[usize],
    classes: usize,
    hyper: &Hyper,
) -> Result<Selector<T>, ClassicalError> {
    check_fit_inputs(x, y, classes)?;
    if y.iter().all(|&c| c == y[0]) {
        return Ok(Selector::Constant { class: y[0], classes });
    }
    Ok(match hyper {
        Hyper::Tree(p) => Selector::Tree(fit_tree(x, y, classes, p)?),
        Hyper::Forest(p) => Selector::Forest(fit_forest(x, y, classes, p)?),
        Hyper::Knn { k } => Selector::Knn(fit_knn(x, y, classes, *k)?),
        Hyper::Svm(p) => Selector::Svm(fit_svm(x, y, classes, p)?),
    })
}

impl<T: Scalar> Selector<T> {
    pub fn predict(&self, row: &[T]) -> usize {
        match self {
            Selector::Tree(m) => m.predict(row),
            Selector::Forest(m) => m.predict(row),
            Selector::Knn(m) => m.predict(row),
            Selector::Svm(m) => m.predict(row),
            Selector::Constant { class, .. } => *class,
        }
    }

    pub fn predict_all(&self, x: &DenseMatrix<T>) -> Vec<usize> {
        x.iter_rows().map(|r| self.predict(r)).collect()
    }

    /// Per-class scores: leaf or vote fractions, or SVM decision values.
    pub fn scores(&self, row: &[T]) -> Vec<T> {
        match self {
            Selector::Tree(m) => m.predict_proba(row),
            Selector::Forest(m) => m.predict_proba(row),
            Selector::Knn(m) => m.predict_proba(row),
            Selector::Svm(m) => m.decision(row),
            Selector::Constant { class, classes } => {
                (0..*classes).map(|c| if c == *class { T::one() } else { T::zero() }).collect()
            }
        }
    }

    /// Gini importance for tree models.
    pub fn feature_importance(&self) -> Result<Vec<T>, ClassicalError> {
        match self {
            Selector::Tree(m) => Ok(m.feature_importance()),
            Selector::Forest(m) => Ok(m.feature_importance()),
            _ => Err(ClassicalError::UnfitModel),
        }
    }
}

/// Fold index per row. Rows are shuffled, grouped by class, and dealt to
/// folds round-robin with one running counter, so fold sizes differ by at
/// most one overall and within each class.
pub fn stratified_folds(y: &[usize], folds: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..y.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx.sort_by_key(|&i| y[i]);
    let mut fold = vec![0; y.len()];
    for (k, &i) in idx.iter().enumerate() {
        fold[i] = k % folds;
    }
    fold
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: Hyper,
    pub best_score: f64,
    /// Mean fold accuracy per configuration; `None` when a fold failed to fit.
    pub scores: Vec<(Hyper, Option<f64>)>,
    pub seed: u64,
    pub folds: usize,
}

pub fn cross_validate_grid<T: Scalar>(
    x: &DenseMatrix<T>,
    y: &[usize],
    classes: usize,
    grid: &[Hyper],
    folds: usize,
    seed: u64,
) -> Result<GridSearchResult, ClassicalError> {
    check_fit_inputs(x, y, classes)?;
    if folds < 2 || x.rows() < folds {
        return Err(ClassicalError::TooFewInstances {
            needed: folds.max(2),
            got: x.rows(),
        });
    }
    if grid.is_empty() {
        return Err(ClassicalError::InvalidParams("empty grid".into()));
    }
    let assign = stratified_folds(y, folds, seed);
    let parts: Vec<(Vec<usize>, Vec<usize>)> = (0..folds)
        .map(|f| (0..y.len()).partition(|&i| assign[i] != f))
        .collect();
    let mut scores = Vec::with_capacity(grid.len());
    for hyper in grid {
        let mut total = 0.0;
        let mut ok = true;
        for (train, test) in &parts {
            let ty: Vec<usize> = train.iter().map(|&i| y[i]).collect();
            match fit_selector(&x.select_rows(train), &ty, classes, hyper) {
                Ok(model) => {
                    let hits = test.iter().filter(|&&i| model.predict(x.row(i)) == y[i]).count();
                    total += hits as f64 / test.len() as f64;
                }
                Err(e) => {
                    log::debug!("configuration {hyper:?} skipped: {e}");
                    ok = false;
                    break;
                }
            }
        }
        scores.push((*hyper, ok.then(|| total / folds as f64)));
    }
    let mut best: Option<(Hyper, f64)> = None;
    for (h, s) in &scores {
        if let Some(s) = *s {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((*h, s));
            }
        }
    }
    let (best, best_score) =
        best.ok_or_else(|| ClassicalError::InvalidParams("no configuration could be fitted".into()))?;
    Ok(GridSearchResult {
        best,
        best_score,
        scores,
        seed,
        folds,
    })
}

/// Four per-solver yes/no models combined into a winner-set prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BinaryEnsemble<T> {
    pub members: Vec<Selector<T>>,
}

pub fn fit_method3_binary<T: Scalar>(
    x: &DenseMatrix<T>,
    targets: &[Vec<bool>],
    hypers: &[Hyper],
) -> Result<BinaryEnsemble<T>, ClassicalError> {
    if targets.len() != hypers.len() {
        return Err(ClassicalError::InvalidParams(format!(
            "{} target columns but {} configurations",
            targets.len(),
            hypers.len()
        )));
    }
    let members = targets
        .iter()
        .zip(hypers)
        .map(|(t, h)| {
            let y: Vec<usize> = t.iter().map(|&b| b as usize).collect();
            fit_selector(x, &y, 2, h)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BinaryEnsemble { members })
}

/// Solvers whose model says yes; with no yes, the single solver with the
/// highest positive score (lowest index on ties).
pub fn combine_binary<T: Scalar>(positive: &[bool], scores: &[T]) -> Vec<bool> {
    if positive.iter().any(|&p| p) {
        return positive.to_vec();
    }
    let mut best = 0;
    for i in 1..scores.len() {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    (0..positive.len()).map(|i| i == best).collect()
}

impl<T: Scalar> BinaryEnsemble<T> {
    pub fn predict_set(&self, row: &[T]) -> Vec<bool> {
        let positive: Vec<bool> = self.members.iter().map(|m| m.predict(row) == 1).collect();
        let scores: Vec<T> = self.members.iter().map(|m| m.scores(row)[1]).collect();
        combine_binary(&positive, &scores)
    }
}

pub const MODEL_FORMAT: &str = "cliquesel-selector";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", tag = "layout", rename_all = "lowercase")]
pub enum ModelBody<T> {
    Multiclass { model: Selector<T> },
    Binary { ensemble: BinaryEnsemble<T> },
}

/// Versioned JSON document for a fitted classical selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ModelFile<T> {
    pub format: String,
    pub version: u32,
    pub family: ModelFamily,
    pub variant: DatasetVariant,
    pub hyper: Vec<Hyper>,
    pub feature_names: Vec<String>,
    pub body: ModelBody<T>,
}

impl<T: Scalar> ModelFile<T> {
    pub fn new(family: ModelFamily, variant: DatasetVariant, hyper: Vec<Hyper>, body: ModelBody<T>) -> Self {
        Self {
            format: MODEL_FORMAT.to_owned(),
            version: MODEL_VERSION,
            family,
            variant,
            hyper,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            body,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ClassicalError> {
        let m: Self = serde_json::from_str(text).map_err(|e| ClassicalError::Format(e.to_string()))?;
        if m.format != MODEL_FORMAT || m.version != MODEL_VERSION {
            return Err(ClassicalError::Format(format!(
                "unsupported model {} v{}",
                m.format, m.version
            )));
        }
        Ok(m)
    }
}

pub const DEFAULT_FOLDS: usize = 5;

fn search<T: Scalar>(
    x: &DenseMatrix<T>,
    y: &[usize],
    classes: usize,
    grid: &[Hyper],
    folds: usize,
    seed: u64,
) -> Result<(Hyper, Option<GridSearchResult>), ClassicalError> {
    let folds = folds.min(y.len());
    if folds < 2 || y.iter().all(|&c| c == y[0]) {
        return Ok((grid[0], None));
    }
    let r = cross_validate_grid(x, y, classes, grid, folds, seed)?;
    Ok((r.best, Some(r)))
}

/// Grid search over the family's default grid on the training rows, then a
/// refit on all of them. Method3 searches each solver's yes/no column on its
/// own.
pub fn train_model_file<T: Scalar>(
    train: &[LabeledInstance<T>],
    variant: DatasetVariant,
    family: ModelFamily,
    folds: usize,
    seed: u64,
) -> Result<(ModelFile<T>, Vec<GridSearchResult>), ClassicalError> {
    if train.is_empty() {
        return Err(ClassicalError::EmptyData);
    }
    let x = feature_matrix(train);
    let grid = family.default_grid(seed);
    let mut searches = Vec::new();
    let (hyper, body) = match variant {
        DatasetVariant::Method1 | DatasetVariant::Method2 => {
            let y: Vec<usize> = train.iter().map(|i| i.label().index()).collect();
            let (best, r) = search(&x, &y, SolverId::ALL.len(), &grid, folds, seed)?;
            searches.extend(r);
            let model = fit_selector(&x, &y, SolverId::ALL.len(), &best)?;
            (vec![best], ModelBody::Multiclass { model })
        }
        DatasetVariant::Method3 => {
            let mut hypers = Vec::new();
            let mut targets = Vec::new();
            for s in SolverId::ALL {
                let t: Vec<bool> = train.iter().map(|i| i.winners.contains(&s)).collect();
                let y: Vec<usize> = t.iter().map(|&b| b as usize).collect();
                let (best, r) = search(&x, &y, 2, &grid, folds, seed)?;
                searches.extend(r);
                hypers.push(best);
                targets.push(t);
            }
            let ensemble = fit_method3_binary(&x, &targets, &hypers)?;
            (hypers, ModelBody::Binary { ensemble })
        }
    };
    Ok((ModelFile::new(family, variant, hyper, body), searches))
}

impl<T: Scalar> ModelFile<T> {
    pub fn predict_row(&self, row: &[T]) -> Vec<bool> {
        match &self.body {
            ModelBody::Multiclass { model } => {
                let c = model.predict(row);
                (0..SolverId::ALL.len()).map(|i| i == c).collect()
            }
            ModelBody::Binary { ensemble } => ensemble.predict_set(row),
        }
    }

    /// Predictions in the layout the metrics expect for this model's variant.
    pub fn predict_labels(&self, data: &[LabeledInstance<T>]) -> Labels {
        let x = feature_matrix(data);
        match &self.body {
            ModelBody::Multiclass { model } => Labels::Single(model.predict_all(&x)),
            ModelBody::Binary { ensemble } => Labels::Sets(
                x.iter_rows()
                    .map(|r| {
                        let p = ensemble.predict_set(r);
                        [p[0], p[1], p[2], p[3]]
                    })
                    .collect(),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (DenseMatrix<f64>, Vec<usize>) {
        let rows: Vec<Vec<f64>> = (0..23).map(|i| vec![i as f64, (i % 4) as f64]).collect();
        let y = (0..23).map(|i| usize::from(i >= 12)).collect();
        (DenseMatrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn fold_sizes_balanced() {
        let (_, y) = toy();
        let f = stratified_folds(&y, 5, 3);
        let mut sizes = vec![0; 5];
        f.iter().for_each(|&k| sizes[k] += 1);
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(sizes, vec![5, 5, 5, 4, 4]);
        assert_eq!(f, stratified_folds(&y, 5, 3));
        for c in 0..2 {
            let mut per = vec![0; 5];
            (0..y.len()).filter(|&i| y[i] == c).for_each(|i| per[f[i]] += 1);
            assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn single_config_grid() {
        let (x, y) = toy();
        let grid = vec![Hyper::Knn { k: 3 }];
        let r = cross_validate_grid(&x, &y, 2, &grid, 5, 1).unwrap();
        assert_eq!(r.best, grid[0]);
    }

    #[test]
    fn grid_picks_first_best() {
        let (x, y) = toy();
        let grid = ModelFamily::Dt.default_grid(0);
        let r = cross_validate_grid(&x, &y, 2, &grid, 5, 1).unwrap();
        let top = r.scores.iter().filter_map(|s| s.1).fold(f64::MIN, f64::max);
        let first = r.scores.iter().find(|s| s.1 == Some(top)).unwrap().0;
        assert_eq!(r.best, first);
        assert!(cross_validate_grid(&x.select_rows(&[0, 1]), &y[..2], 2, &grid, 5, 1).is_err());
    }

    #[test]
    fn binary_combination() {
        assert_eq!(combine_binary(&[true, false, false, false], &[0.9, 0.1, 0.0, 0.0]), vec![true, false, false, false]);
        assert_eq!(combine_binary(&[false; 4], &[0.4, 0.2, 0.1, 0.3]), vec![true, false, false, false]);
        assert_eq!(combine_binary(&[true, true, false, false], &[0.6, 0.7, 0.0, 0.0]), vec![true, true, false, false]);
    }

    #[test]
    fn model_file_round_trip() {
        let (x, y) = toy();
        let h = Hyper::Forest(ForestParams {
            n_trees: 3,
            ..ForestParams::default()
        });
        let m = fit_selector(&x, &y, 2, &h).unwrap();
        let file = ModelFile::new(ModelFamily::Rf, DatasetVariant::Method2, vec![h], ModelBody::Multiclass { model: m });
        let back = ModelFile::<f64>::from_json(&file.to_json()).unwrap();
        assert_eq!(back, file);
        let bad = file.to_json().replace("\"version\": 1", "\"version\": 99");
        assert!(ModelFile::<f64>::from_json(&bad).is_err());
    }

    #[test]
    fn constant_targets_give_constant_member() {
        let (x, _) = toy();
        let targets = vec![vec![true; 23], vec![false; 23], vec![false; 23], vec![false; 23]];
        let e = fit_method3_binary(&x, &targets, &[Hyper::Svm(SvmParams::default()); 4]).unwrap();
        assert_eq!(e.predict_set(x.row(0)), vec![true, false, false, false]);
    }
}

//! Bagged CART trees with per-split feature subsampling and hard voting.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{argmax_counts, fit_tree_on, normalize, TreeModel, TreeParams};
use super::{check_fit_inputs, ClassicalError};
use crate::matrix::DenseMatrix;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features per split; `None` means round(√F).
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ForestModel<T> {
    pub params: ForestParams,
    pub classes: usize,
    /// Tree `i` drew its bootstrap sample and feature subsets from stream `i`
    /// of a ChaCha8 generator seeded with `params.seed`.
    pub trees: Vec<TreeModel<T>>,
}

pub fn default_max_features(f: usize) -> usize {
    ((f as f64).sqrt().round() as usize).clamp(1, f.max(1))
}

pub fn fit_forest<T: Scalar>(
    x: &DenseMatrix<T>,
    y: &[usize],
    classes: usize,
    params: &ForestParams,
) -> Result<ForestModel<T>, ClassicalError> {
    check_fit_inputs(x, y, classes)?;
    if params.n_trees == 0 {
        return Err(ClassicalError::InvalidParams("n_trees must be at least 1".into()));
    }
    let n = x.rows();
    let tp = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        max_features: Some(params.max_features.unwrap_or_else(|| default_max_features(x.cols()))),
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(t as u64);
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            fit_tree_on(x, y, classes, &tp, &rows, &mut rng)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ForestModel {
        params: *params,
        classes,
        trees,
    })
}

impl<T: Scalar> ForestModel<T> {
    pub fn votes(&self, row: &[T]) -> Vec<usize> {
        let mut votes = vec![0usize; self.classes];
        for t in &self.trees {
            votes[t.predict(row)] += 1;
        }
        votes
    }

    /// Majority vote; ties go to the lowest class index.
    pub fn predict(&self, row: &[T]) -> usize {
        argmax_counts(&self.votes(row))
    }

    /// Fraction of trees voting for each class.
    pub fn predict_proba(&self, row: &[T]) -> Vec<T> {
        let n = T::from_count(self.trees.len());
        self.votes(row).into_iter().map(|v| T::from_count(v) / n).collect()
    }

    /// Mean of the per-tree normalized impurity decreases, renormalized so
    /// the vector sums to 1 whenever any tree split.
    pub fn feature_importance(&self) -> Vec<T> {
        let f = self.trees.first().map_or(0, |t| t.features);
        let mut acc = vec![T::zero(); f];
        for t in &self.trees {
            for (a, v) in acc.iter_mut().zip(t.feature_importance()) {
                *a += v;
            }
        }
        normalize(&acc)
    }
}

#[cfg(test)]
mod tests {
    use super::super::tree::fit_tree;
    use super::*;

    fn blobs() -> (DenseMatrix<f64>, Vec<usize>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..30 {
            let c = i % 3;
            let jitter = (i as f64 * 0.37).sin() * 0.3;
            rows.push(vec![c as f64 * 3.0 + jitter, 1.0, (i as f64).cos()]);
            y.push(c);
        }
        (DenseMatrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn degenerate_forest_is_a_tree() {
        let (x, y) = blobs();
        let p = ForestParams {
            n_trees: 1,
            bootstrap: false,
            max_features: Some(3),
            ..ForestParams::default()
        };
        let f = fit_forest(&x, &y, 3, &p).unwrap();
        let t = fit_tree(&x, &y, 3, &TreeParams::default()).unwrap();
        assert_eq!(f.trees[0].nodes, t.nodes);
        assert!((0..x.rows()).all(|i| f.predict(x.row(i)) == t.predict(x.row(i))));
    }

    #[test]
    fn separable_and_deterministic() {
        let (x, y) = blobs();
        let p = ForestParams {
            n_trees: 15,
            seed: 4,
            ..ForestParams::default()
        };
        let a = fit_forest(&x, &y, 3, &p).unwrap();
        let b = fit_forest(&x, &y, 3, &p).unwrap();
        assert_eq!(a, b);
        assert!((0..x.rows()).all(|i| a.predict(x.row(i)) == y[i]));
    }

    #[test]
    fn importance_finds_informative_column() {
        let (x, y) = blobs();
        let p = ForestParams {
            n_trees: 20,
            ..ForestParams::default()
        };
        let imp = fit_forest(&x, &y, 3, &p).unwrap().feature_importance();
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(imp[1], 0.0);
        assert!(imp[0] > 0.5);
    }

    #[test]
    fn default_features_per_split() {
        assert_eq!(default_max_features(12), 3);
        assert_eq!(default_max_features(1), 1);
    }
}

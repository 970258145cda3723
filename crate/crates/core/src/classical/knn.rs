//! k-nearest neighbors on z-scored features.

use serde::{Deserialize, Serialize};

use super::tree::argmax_counts;
use super::{check_fit_inputs, fit_zscore, ClassicalError};
use crate::features::ZScoreNormalizer;
use crate::matrix::DenseMatrix;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct KnnModel<T> {
    pub k: usize,
    pub classes: usize,
    pub normalizer: ZScoreNormalizer<T>,
    /// Normalized training rows.
    pub x: DenseMatrix<T>,
    pub y: Vec<usize>,
}

/// Stores the z-scored training set. Queries are normalized with the same
/// statistics.
pub fn fit_knn<T: Scalar>(x: &DenseMatrix<T>, y: &[usize], classes: usize, k: usize) -> Result<KnnModel<T>, ClassicalError> {
    check_fit_inputs(x, y, classes)?;
    if k == 0 || k > x.rows() {
        return Err(ClassicalError::KTooLarge { k, n: x.rows() });
    }
    let normalizer = fit_zscore(x);
    Ok(KnnModel {
        k,
        classes,
        x: normalizer.apply(x),
        normalizer,
        y: y.to_vec(),
    })
}

impl<T: Scalar> KnnModel<T> {
    /// Indices of the `k` nearest training rows; equal distances keep the
    /// lower training index.
    pub fn neighbors(&self, row: &[T]) -> Vec<usize> {
        let mut q = row.to_vec();
        self.normalizer.apply_row(&mut q);
        let mut d: Vec<(T, usize)> = self
            .x
            .iter_rows()
            .enumerate()
            .map(|(i, r)| {
                let s: T = r.iter().zip(&q).map(|(&a, &b)| (a - b) * (a - b)).sum();
                (s, i)
            })
            .collect();
        d.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite").then(a.1.cmp(&b.1)));
        d.into_iter().take(self.k).map(|(_, i)| i).collect()
    }

    pub fn votes(&self, row: &[T]) -> Vec<usize> {
        let mut votes = vec![0usize; self.classes];
        for i in self.neighbors(row) {
            votes[self.y[i]] += 1;
        }
        votes
    }

    /// Majority among the neighbors; ties go to the lowest class index.
    pub fn predict(&self, row: &[T]) -> usize {
        argmax_counts(&self.votes(row))
    }

    pub fn predict_proba(&self, row: &[T]) -> Vec<T> {
        let k = T::from_count(self.k);
        self.votes(row).into_iter().map(|v| T::from_count(v) / k).collect()
    }
}

use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::matrix::DenseMatrix;
use crate::Scalar;

/// Per-column `(x − min) / (max − min)`; constant columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MinMaxNormalizer<T> {
    pub min: Vec<T>,
    pub max: Vec<T>,
}

impl<T: Scalar> MinMaxNormalizer<T> {
    pub fn fit(m: &DenseMatrix<T>) -> Self {
        let mut min = vec![T::infinity(); m.cols()];
        let mut max = vec![T::neg_infinity(); m.cols()];
        for row in m.iter_rows() {
            for (j, &x) in row.iter().enumerate() {
                min[j] = min[j].min(x);
                max[j] = max[j].max(x);
            }
        }
        Self { min, max }
    }

    pub fn apply_row(&self, row: &mut [T]) {
        for (j, x) in row.iter_mut().enumerate() {
            let range = self.max[j] - self.min[j];
            *x = if range > T::zero() {
                (*x - self.min[j]) / range
            } else {
                T::zero()
            };
        }
    }

    pub fn apply(&self, m: &DenseMatrix<T>) -> DenseMatrix<T> {
        let mut out = m.clone();
        for i in 0..out.rows() {
            self.apply_row(out.row_mut(i));
        }
        out
    }
}

/// Per-column `(x − μ) / σ` with the population standard deviation;
/// constant columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ZScoreNormalizer<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Scalar> ZScoreNormalizer<T> {
    pub fn fit(m: &DenseMatrix<T>) -> Result<Self, FeatureError> {
        if m.rows() < 2 {
            return Err(FeatureError::TooFewRows {
                needed: 2,
                got: m.rows(),
            });
        }
        let mean = m.mean_rows();
        let n = T::from_count(m.rows());
        let mut var = vec![T::zero(); m.cols()];
        for row in m.iter_rows() {
            for (j, &x) in row.iter().enumerate() {
                let d = x - mean[j];
                var[j] += d * d;
            }
        }
        Ok(Self {
            mean,
            std: var.into_iter().map(|v| (v / n).sqrt()).collect(),
        })
    }

    pub fn apply_row(&self, row: &mut [T]) {
        for (j, x) in row.iter_mut().enumerate() {
            *x = if self.std[j] > T::zero() {
                (*x - self.mean[j]) / self.std[j]
            } else {
                T::zero()
            };
        }
    }

    pub fn apply(&self, m: &DenseMatrix<T>) -> DenseMatrix<T> {
        let mut out = m.clone();
        for i in 0..out.rows() {
            self.apply_row(out.row_mut(i));
        }
        out
    }
}

pub fn minmax_fit_apply<T: Scalar>(m: &DenseMatrix<T>) -> (MinMaxNormalizer<T>, DenseMatrix<T>) {
    let norm = MinMaxNormalizer::fit(m);
    let out = norm.apply(m);
    (norm, out)
}

pub fn zscore_fit_apply<T: Scalar>(
    m: &DenseMatrix<T>,
) -> Result<(ZScoreNormalizer<T>, DenseMatrix<T>), FeatureError> {
    let norm = ZScoreNormalizer::fit(m)?;
    let out = norm.apply(m);
    Ok((norm, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(xs: &[f64]) -> DenseMatrix<f64> {
        DenseMatrix::from_vec(xs.len(), 1, xs.to_vec()).unwrap()
    }

    #[test]
    fn minmax_examples() {
        assert_eq!(minmax_fit_apply(&col(&[2.0, 4.0, 6.0])).1.as_slice(), &[0.0, 0.5, 1.0]);
        assert_eq!(minmax_fit_apply(&col(&[5.0, 5.0, 5.0])).1.as_slice(), &[0.0; 3]);
        assert_eq!(minmax_fit_apply(&col(&[0.0, 1.0])).1.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn zscore_examples() {
        let (norm, z) = zscore_fit_apply(&col(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(norm.mean, vec![2.0]);
        let want = [-1.224745, 0.0, 1.224745];
        for (a, b) in z.as_slice().iter().zip(want) {
            assert!((a - b).abs() < 1e-6);
        }
        assert_eq!(zscore_fit_apply(&col(&[7.0, 7.0])).unwrap().1.as_slice(), &[0.0, 0.0]);
        assert_eq!(zscore_fit_apply(&col(&[-1.0, 1.0])).unwrap().1.as_slice(), &[-1.0, 1.0]);
        assert_eq!(
            zscore_fit_apply(&col(&[1.0])).unwrap_err(),
            FeatureError::TooFewRows { needed: 2, got: 1 }
        );
    }

    #[test]
    fn fit_then_apply_to_unseen_rows() {
        let train = col(&[0.0, 10.0]);
        let (mm, _) = minmax_fit_apply(&train);
        assert_eq!(mm.apply(&col(&[20.0, -10.0])).as_slice(), &[2.0, -1.0]);
    }
}

//! One-vs-rest linear SVM trained by stochastic subgradient descent on the
//! L2-regularized hinge loss (Pegasos step sizes).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_fit_inputs, fit_zscore, ClassicalError};
use crate::features::ZScoreNormalizer;
use crate::matrix::DenseMatrix;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            epochs: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LinearSvmModel<T> {
    pub params: SvmParams,
    pub classes: usize,
    pub normalizer: ZScoreNormalizer<T>,
    /// One weight vector per class, over normalized features.
    pub weights: Vec<Vec<T>>,
    pub bias: Vec<T>,
}

/// Minimizes `λ/2 ‖w‖² + mean hinge` with `λ = 1 / (C n)` for each class
/// against the rest. The bias is learned as the weight of a constant input.
/// Sample order per epoch comes from a ChaCha8 stream per class.
pub fn fit_svm<T: Scalar>(
    x: &DenseMatrix<T>,
    y: &[usize],
    classes: usize,
    params: &SvmParams,
) -> Result<LinearSvmModel<T>, ClassicalError> {
    check_fit_inputs(x, y, classes)?;
    let mut present = vec![false; classes];
    y.iter().for_each(|&c| present[c] = true);
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(ClassicalError::SingleClass);
    }
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(ClassicalError::InvalidParams(format!("C must be positive, got {}", params.c)));
    }
    let normalizer = fit_zscore(x);
    let xn = normalizer.apply(x);
    let n = xn.rows();
    let f = xn.cols();
    let lambda = T::lit(1.0 / (params.c * n as f64));
    let radius = T::one() / lambda.sqrt();
    let mut weights = Vec::with_capacity(classes);
    let mut bias = Vec::with_capacity(classes);
    for class in 0..classes {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(class as u64);
        // w[f] is the bias weight.
        let mut w = vec![T::zero(); f + 1];
        let mut order: Vec<usize> = (0..n).collect();
        let mut t = 0usize;
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = T::one() / (lambda * T::from_count(t));
                let target = if y[i] == class { T::one() } else { -T::one() };
                let row = xn.row(i);
                let margin = target * (row.iter().zip(&w).map(|(&a, &b)| a * b).sum::<T>() + w[f]);
                let shrink = T::one() - eta * lambda;
                w.iter_mut().for_each(|v| *v *= shrink);
                if margin < T::one() {
                    for (v, &a) in w.iter_mut().zip(row) {
                        *v += eta * target * a;
                    }
                    w[f] += eta * target;
                }
                let norm = w.iter().map(|&v| v * v).sum::<T>().sqrt();
                if norm > radius {
                    let s = radius / norm;
                    w.iter_mut().for_each(|v| *v *= s);
                }
            }
        }
        bias.push(w[f]);
        w.truncate(f);
        weights.push(w);
    }
    Ok(LinearSvmModel {
        params: *params,
        classes,
        normalizer,
        weights,
        bias,
    })
}

impl<T: Scalar> LinearSvmModel<T> {
    pub fn decision(&self, row: &[T]) -> Vec<T> {
        let mut q = row.to_vec();
        self.normalizer.apply_row(&mut q);
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, &b)| w.iter().zip(&q).map(|(&a, &c)| a * c).sum::<T>() + b)
            .collect()
    }

    /// Class with the highest score; ties go to the lowest index.
    pub fn predict(&self, row: &[T]) -> usize {
        let s = self.decision(row);
        let mut best = 0;
        for c in 1..s.len() {
            if s[c] > s[best] {
                best = c;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> (DenseMatrix<f64>, Vec<usize>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            let t = i as f64 * 0.3;
            rows.push(vec![t.cos() + 3.0, t.sin()]);
            y.push(0);
            rows.push(vec![t.cos() - 3.0, t.sin() + 0.5]);
            y.push(1);
        }
        (DenseMatrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn separates_two_blobs() {
        let (x, y) = separable();
        let m = fit_svm(&x, &y, 2, &SvmParams::default()).unwrap();
        assert!((0..x.rows()).all(|i| m.predict(x.row(i)) == y[i]));
    }

    #[test]
    fn scaled_features_give_same_predictions() {
        let (x, y) = separable();
        let x2 = x.map(|v| v * 2.0);
        let a = fit_svm(&x, &y, 2, &SvmParams::default()).unwrap();
        let b = fit_svm(&x2, &y, 2, &SvmParams::default()).unwrap();
        for i in 0..x.rows() {
            assert_eq!(a.predict(x.row(i)), b.predict(x2.row(i)));
        }
    }

    #[test]
    fn deterministic() {
        let (x, y) = separable();
        let p = SvmParams { seed: 9, ..SvmParams::default() };
        assert_eq!(fit_svm(&x, &y, 2, &p).unwrap(), fit_svm(&x, &y, 2, &p).unwrap());
    }

    #[test]
    fn single_class_rejected() {
        let (x, _) = separable();
        let y = vec![1; x.rows()];
        assert!(matches!(fit_svm(&x, &y, 2, &SvmParams::default()), Err(ClassicalError::SingleClass)));
    }
}

//! CART classification tree on Gini impurity.
//!
//! Split quality is compared exactly in integer arithmetic: minimizing the
//! weighted child impurity is the same as maximizing
//! `Σ l_c² / n_l + Σ r_c² / n_r` over the class counts of both sides.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_fit_inputs, ClassicalError};
use crate::matrix::DenseMatrix;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features sampled per split; `None` considers all.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub enum Node<T> {
    Leaf {
        counts: Vec<usize>,
    },
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
        counts: Vec<usize>,
    },
}

impl<T> Node<T> {
    pub fn counts(&self) -> &[usize] {
        match self {
            Node::Leaf { counts } | Node::Split { counts, .. } => counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TreeModel<T> {
    pub params: TreeParams,
    pub classes: usize,
    pub features: usize,
    /// Root at index 0. A sample goes left when `x[feature] <= threshold`.
    pub nodes: Vec<Node<T>>,
    /// Total weighted impurity decrease per feature, unnormalized.
    pub impurity_decrease: Vec<T>,
}

/// Gini impurity of a class-count vector.
pub fn gini<T: Scalar>(counts: &[usize]) -> T {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return T::zero();
    }
    let sq: usize = counts.iter().map(|c| c * c).sum();
    T::one() - T::from_count(sq) / T::from_count(n * n)
}

fn argmax_lowest(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &v) in counts.iter().enumerate() {
        if v > counts[best] {
            best = c;
        }
    }
    best
}

/// Split score as an exact fraction `num / den` of
/// `Σl²/n_l + Σr²/n_r`.
#[derive(Debug, Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn of(left: &[usize], right: &[usize]) -> Self {
        let nl: u128 = left.iter().map(|&c| c as u128).sum();
        let nr: u128 = right.iter().map(|&c| c as u128).sum();
        let sl: u128 = left.iter().map(|&c| (c * c) as u128).sum();
        let sr: u128 = right.iter().map(|&c| (c * c) as u128).sum();
        Self {
            num: sl * nr + sr * nl,
            den: nl * nr,
        }
    }

    fn parent(counts: &[usize]) -> Self {
        let n: u128 = counts.iter().map(|&c| c as u128).sum();
        Self {
            num: counts.iter().map(|&c| (c * c) as u128).sum(),
            den: n,
        }
    }

    fn beats(&self, other: &Self) -> bool {
        self.num * other.den > other.num * self.den
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BestSplit<T> {
    pub feature: usize,
    pub threshold: T,
    score: Score,
}

/// Best split of `rows` over `features`, scanning features in the given
/// order and thresholds ascending; the first strictly best split wins.
/// Returns `None` when no admissible split lowers the impurity.
pub(crate) fn best_split<T: Scalar>(
    x: &DenseMatrix<T>,
    y: &[usize],
    classes: usize,
    rows: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<BestSplit<T>> {
    let mut parent = vec![0usize; classes];
    rows.iter().for_each(|&r| parent[y[r]] += 1);
    let mut best: Option<BestSplit<T>> = None;
    let floor = Score::parent(&parent);
    let mut sorted = rows.to_vec();
    for &f in features {
        sorted.sort_by(|&a, &b| x.get(a, f).partial_cmp(&x.get(b, f)).expect("finite").then(a.cmp(&b)));
        let mut left = vec![0usize; classes];
        let mut right = parent.clone();
        for i in 0..sorted.len().saturating_sub(1) {
            let c = y[sorted[i]];
            left[c] += 1;
            right[c] -= 1;
            let (a, b) = (x.get(sorted[i], f), x.get(sorted[i + 1], f));
            if a == b || i + 1 < min_leaf || sorted.len() - i - 1 < min_leaf {
                continue;
            }
            let score = Score::of(&left, &right);
            let better = match &best {
                None => score.beats(&floor),
                Some(b) => score.beats(&b.score),
            };
            if better {
                let mut threshold = (a + b) / T::lit(2.0);
                if threshold >= b {
                    threshold = a;
                }
                best = Some(BestSplit {
                    feature: f,
                    threshold,
                    score,
                });
            }
        }
    }
    best
}

pub fn fit_tree<T: Scalar>(
    x: &DenseMatrix<T>,
    y: &[usize],
    classes: usize,
    params: &TreeParams,
) -> Result<TreeModel<T>, ClassicalError> {
    let rows: Vec<usize> = (0..x.rows()).collect();
    fit_tree_on(x, y, classes, params, &rows, &mut rand::rngs::mock::StepRng::new(0, 0))
}

/// Fits on the multiset `rows` (bootstrap samples may repeat), drawing the
/// per-split feature subsets from `rng`.
pub(crate) fn fit_tree_on<T: Scalar, R: Rng>(
    x: &DenseMatrix<T>,
    y: &[usize],
    classes: usize,
    params: &TreeParams,
    rows: &[usize],
    rng: &mut R,
) -> Result<TreeModel<T>, ClassicalError> {
    check_fit_inputs(x, y, classes)?;
    let f = x.cols();
    let mut model = TreeModel {
        params: *params,
        classes,
        features: f,
        nodes: Vec::new(),
        impurity_decrease: vec![T::zero(); f],
    };
    let min_leaf = params.min_samples_leaf.max(1);
    let n_total = T::from_count(rows.len());
    // (rows, depth, parent slot to patch)
    let mut stack: Vec<(Vec<usize>, usize, Option<(usize, bool)>)> = vec![(rows.to_vec(), 0, None)];
    while let Some((rows, depth, slot)) = stack.pop() {
        let mut counts = vec![0usize; classes];
        rows.iter().for_each(|&r| counts[y[r]] += 1);
        let id = model.nodes.len();
        if let Some((p, is_left)) = slot {
            if let Node::Split { left, right, .. } = &mut model.nodes[p] {
                *if is_left { left } else { right } = id;
            }
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_ok = params.max_depth.is_none_or(|d| depth < d);
        let split = if pure || !depth_ok || rows.len() < 2 * min_leaf {
            None
        } else {
            let feats: Vec<usize> = match params.max_features {
                Some(k) if k < f => {
                    let mut s = index::sample(rng, f, k.max(1)).into_vec();
                    s.sort_unstable();
                    s
                }
                _ => (0..f).collect(),
            };
            best_split(x, y, classes, &rows, &feats, min_leaf)
        };
        match split {
            None => model.nodes.push(Node::Leaf { counts }),
            Some(s) => {
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x.get(i, s.feature) <= s.threshold);
                let mut lc = vec![0usize; classes];
                let mut rc = vec![0usize; classes];
                l.iter().for_each(|&i| lc[y[i]] += 1);
                r.iter().for_each(|&i| rc[y[i]] += 1);
                let n = T::from_count(rows.len());
                let weighted = T::from_count(l.len()) * gini::<T>(&lc) + T::from_count(r.len()) * gini::<T>(&rc);
                model.impurity_decrease[s.feature] += (n * gini::<T>(&counts) - weighted) / n_total;
                model.nodes.push(Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left: usize::MAX,
                    right: usize::MAX,
                    counts,
                });
                // Right pushed first so the left subtree is numbered first.
                stack.push((r, depth + 1, Some((id, false))));
                stack.push((l, depth + 1, Some((id, true))));
            }
        }
    }
    Ok(model)
}

impl<T: Scalar> TreeModel<T> {
    pub fn leaf(&self, row: &[T]) -> &[usize] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict(&self, row: &[T]) -> usize {
        argmax_lowest(self.leaf(row))
    }

    pub fn predict_proba(&self, row: &[T]) -> Vec<T> {
        let counts = self.leaf(row);
        let n = T::from_count(counts.iter().sum::<usize>().max(1));
        counts.iter().map(|&c| T::from_count(c) / n).collect()
    }

    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn split_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Split { .. })).count()
    }

    /// Impurity decrease normalized to sum to 1; all zero without splits.
    pub fn feature_importance(&self) -> Vec<T> {
        normalize(&self.impurity_decrease)
    }
}

pub(crate) fn normalize<T: Scalar>(v: &[T]) -> Vec<T> {
    let total: T = v.iter().copied().sum();
    if total > T::zero() {
        v.iter().map(|&x| x / total).collect()
    } else {
        vec![T::zero(); v.len()]
    }
}

pub(crate) fn argmax_counts(counts: &[usize]) -> usize {
    argmax_lowest(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(points: &[(f64, usize)]) -> (DenseMatrix<f64>, Vec<usize>) {
        let rows: Vec<Vec<f64>> = points.iter().map(|p| vec![p.0]).collect();
        (DenseMatrix::from_rows(&rows).unwrap(), points.iter().map(|p| p.1).collect())
    }

    #[test]
    fn one_split_separates() {
        let (x, y) = data(&[(0.0, 0), (1.0, 0), (10.0, 1), (11.0, 1)]);
        let t = fit_tree(&x, &y, 2, &TreeParams::default()).unwrap();
        assert_eq!(t.depth(), 1);
        assert_eq!(t.nodes.len(), 3);
        assert!((0..4).all(|i| t.predict(x.row(i)) == y[i]));
        match &t.nodes[0] {
            Node::Split { threshold, .. } => assert_eq!(*threshold, 5.5),
            _ => panic!("expected split"),
        }
    }

    #[test]
    fn single_label_is_leaf() {
        let (x, y) = data(&[(0.0, 2), (1.0, 2), (5.0, 2)]);
        let t = fit_tree(&x, &y, 3, &TreeParams::default()).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.feature_importance(), vec![0.0]);
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini::<f64>(&[4, 0]), 0.0);
        assert_eq!(gini::<f64>(&[3, 3]), 0.5);
    }

    #[test]
    fn depth_and_leaf_limits() {
        let (x, y) = data(&[(0.0, 0), (1.0, 1), (2.0, 0), (3.0, 1), (4.0, 0), (5.0, 1)]);
        let shallow = TreeParams {
            max_depth: Some(1),
            ..TreeParams::default()
        };
        assert!(fit_tree(&x, &y, 2, &shallow).unwrap().depth() <= 1);
        let wide = TreeParams {
            min_samples_leaf: 3,
            ..TreeParams::default()
        };
        let t = fit_tree(&x, &y, 2, &wide).unwrap();
        for n in &t.nodes {
            if let Node::Leaf { counts } = n {
                assert!(counts.iter().sum::<usize>() >= 3);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let x: DenseMatrix<f64> = DenseMatrix::zeros(0, 2);
        assert!(matches!(fit_tree(&x, &[], 2, &TreeParams::default()), Err(ClassicalError::EmptyData)));
        let x = DenseMatrix::from_rows(&[vec![f64::NAN]]).unwrap();
        assert!(matches!(
            fit_tree(&x, &[0], 2, &TreeParams::default()),
            Err(ClassicalError::NonFiniteFeature)
        ));
    }
}

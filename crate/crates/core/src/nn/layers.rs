//! Multi-head graph attention over closed neighborhoods, with exact
//! backward pass.

use crate::graph::Graph;
use crate::matrix::DenseMatrix;
use crate::Scalar;

/// Closed neighborhoods `N(u) ∪ {u}` in compressed rows; the node itself
/// comes first in its row.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhoods {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Neighborhoods {
    pub fn of(g: &Graph) -> Self {
        let mut offsets = Vec::with_capacity(g.node_count() + 1);
        let mut targets = Vec::with_capacity(g.node_count() + 2 * g.edge_count());
        offsets.push(0);
        for u in 0..g.node_count() {
            targets.push(u);
            targets.extend_from_slice(g.neighbors(u));
            offsets.push(targets.len());
        }
        Self { offsets, targets }
    }

    pub fn nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn slots(&self) -> usize {
        self.targets.len()
    }

    /// Slot range and targets of node `u`.
    pub fn of_node(&self, u: usize) -> (usize, &[usize]) {
        let (a, b) = (self.offsets[u], self.offsets[u + 1]);
        (a, &self.targets[a..b])
    }
}

#[derive(Debug, Clone)]
pub struct AttentionCache<T> {
    /// `x · W`, all heads side by side.
    pub z: DenseMatrix<T>,
    /// Attention weight per head and slot, `head * slots + slot`.
    pub alpha: Vec<T>,
    /// Score before LeakyReLU, same layout.
    pub pre: Vec<T>,
}

fn leaky<T: Scalar>(x: T, slope: T) -> T {
    if x > T::zero() {
        x
    } else {
        slope * x
    }
}

/// `out_u = Σ_v α_uv (x W)_v` per head, heads concatenated. With `a`
/// (heads × 2d) the weights are a softmax of
/// `LeakyReLU(a_src · z_u + a_dst · z_v)`; without it they are uniform.
pub fn attention_forward<T: Scalar>(
    x: &DenseMatrix<T>,
    nb: &Neighborhoods,
    w: &DenseMatrix<T>,
    a: Option<&DenseMatrix<T>>,
    heads: usize,
    slope: T,
) -> (DenseMatrix<T>, AttentionCache<T>) {
    assert_eq!(x.rows(), nb.nodes(), "attention input rows");
    let z = x.matmul(w);
    let d = w.cols() / heads;
    let n = nb.nodes();
    let slots = nb.slots();
    let mut alpha = vec![T::zero(); heads * slots];
    let mut pre = vec![T::zero(); heads * slots];
    let mut out = DenseMatrix::zeros(n, w.cols());
    for k in 0..heads {
        let cols = k * d..(k + 1) * d;
        let (src, dst): (Vec<T>, Vec<T>) = match a {
            Some(a) => {
                let av = a.row(k);
                (0..n)
                    .map(|u| {
                        let zu = &z.row(u)[cols.clone()];
                        let s = zu.iter().zip(&av[..d]).map(|(&p, &q)| p * q).sum::<T>();
                        let t = zu.iter().zip(&av[d..]).map(|(&p, &q)| p * q).sum::<T>();
                        (s, t)
                    })
                    .unzip()
            }
            None => (Vec::new(), Vec::new()),
        };
        for u in 0..n {
            let (start, targets) = nb.of_node(u);
            let al = &mut alpha[k * slots + start..k * slots + start + targets.len()];
            if a.is_some() {
                let pr = &mut pre[k * slots + start..k * slots + start + targets.len()];
                let mut max = T::neg_infinity();
                for (i, &v) in targets.iter().enumerate() {
                    pr[i] = src[u] + dst[v];
                    al[i] = leaky(pr[i], slope);
                    max = max.max(al[i]);
                }
                let mut sum = T::zero();
                for e in al.iter_mut() {
                    *e = (*e - max).exp();
                    sum += *e;
                }
                al.iter_mut().for_each(|e| *e /= sum);
            } else {
                let uniform = T::one() / T::from_count(targets.len());
                al.iter_mut().for_each(|e| *e = uniform);
            }
            let out_row = &mut out.row_mut(u)[cols.clone()];
            for (i, &v) in targets.iter().enumerate() {
                let zv = &z.row(v)[cols.clone()];
                for (o, &q) in out_row.iter_mut().zip(zv) {
                    *o += al[i] * q;
                }
            }
        }
    }
    (out, AttentionCache { z, alpha, pre })
}

pub struct AttentionGrads<T> {
    pub dx: DenseMatrix<T>,
    pub dw: DenseMatrix<T>,
    pub da: Option<DenseMatrix<T>>,
}

#[allow(clippy::too_many_arguments)]
pub fn attention_backward<T: Scalar>(
    x: &DenseMatrix<T>,
    nb: &Neighborhoods,
    w: &DenseMatrix<T>,
    a: Option<&DenseMatrix<T>>,
    heads: usize,
    slope: T,
    cache: &AttentionCache<T>,
    dout: &DenseMatrix<T>,
) -> AttentionGrads<T> {
    let z = &cache.z;
    let d = w.cols() / heads;
    let n = nb.nodes();
    let slots = nb.slots();
    let mut dz = DenseMatrix::zeros(n, w.cols());
    let mut da = a.map(|a| DenseMatrix::zeros(a.rows(), a.cols()));
    for k in 0..heads {
        let cols = k * d..(k + 1) * d;
        let mut ds = vec![T::zero(); n];
        let mut dt = vec![T::zero(); n];
        for u in 0..n {
            let (start, targets) = nb.of_node(u);
            let al = &cache.alpha[k * slots + start..k * slots + start + targets.len()];
            let du: Vec<T> = dout.row(u)[cols.clone()].to_vec();
            let dalpha: Vec<T> = targets
                .iter()
                .map(|&v| du.iter().zip(&z.row(v)[cols.clone()]).map(|(&p, &q)| p * q).sum())
                .collect();
            for (i, &v) in targets.iter().enumerate() {
                let row = &mut dz.row_mut(v)[cols.clone()];
                for (r, &g) in row.iter_mut().zip(&du) {
                    *r += al[i] * g;
                }
            }
            if a.is_some() {
                let pr = &cache.pre[k * slots + start..k * slots + start + targets.len()];
                let mix: T = al.iter().zip(&dalpha).map(|(&p, &q)| p * q).sum();
                for (i, &v) in targets.iter().enumerate() {
                    let de = al[i] * (dalpha[i] - mix);
                    let dp = if pr[i] > T::zero() { de } else { de * slope };
                    ds[u] += dp;
                    dt[v] += dp;
                }
            }
        }
        if let (Some(a), Some(da)) = (a, da.as_mut()) {
            let av = a.row(k).to_vec();
            for u in 0..n {
                let zu: Vec<T> = z.row(u)[cols.clone()].to_vec();
                let gr = da.row_mut(k);
                for j in 0..d {
                    gr[j] += ds[u] * zu[j];
                    gr[d + j] += dt[u] * zu[j];
                }
                let row = &mut dz.row_mut(u)[cols.clone()];
                for j in 0..d {
                    row[j] += ds[u] * av[j] + dt[u] * av[d + j];
                }
            }
        }
    }
    AttentionGrads {
        dx: dz.matmul_t(w),
        dw: x.t_matmul(&dz),
        da,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(in_dim: usize, d: usize, heads: usize) -> (DenseMatrix<f64>, DenseMatrix<f64>) {
        let w = DenseMatrix::from_fn(in_dim, d * heads, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.2 - 0.4);
        let a = DenseMatrix::from_fn(heads, 2 * d, |i, j| ((i + j * 5) % 7) as f64 * 0.1 - 0.3);
        (w, a)
    }

    #[test]
    fn isolated_node_attends_to_itself() {
        let g = Graph::empty(2);
        let nb = Neighborhoods::of(&g);
        let x = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        let (w, a) = params(2, 3, 2);
        let (out, cache) = attention_forward(&x, &nb, &w, Some(&a), 2, 0.2);
        assert!(cache.alpha.iter().all(|&p| p == 1.0));
        assert_eq!(out, x.matmul(&w));
        assert_eq!(out.row(0), out.row(1));
    }

    #[test]
    fn weights_sum_to_one() {
        let g = Graph::petersen();
        let nb = Neighborhoods::of(&g);
        let x = DenseMatrix::from_fn(10, 2, |i, j| (i * (j + 1)) as f64 * 0.1);
        let (w, a) = params(2, 4, 3);
        for attn in [Some(&a), None] {
            let (_, cache) = attention_forward(&x, &nb, &w, attn, 3, 0.2);
            for k in 0..3 {
                for u in 0..10 {
                    let (s, t) = nb.of_node(u);
                    let total: f64 = cache.alpha[k * nb.slots() + s..k * nb.slots() + s + t.len()].iter().sum();
                    assert!((total - 1.0).abs() < 1e-9);
                    if attn.is_none() {
                        assert_eq!(cache.alpha[k * nb.slots() + s], 1.0 / 4.0);
                    }
                }
            }
        }
    }
}

use ndarray::{Array2, ArrayView2};

/// Thin singular value decomposition `A = U diag(s) Vᵀ`, values descending.
///
/// `u` is m×k and `v` is n×k with k = `s.len()`. Columns paired with a zero
/// singular value are left as zero vectors.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Array2<f64>,
    pub s: Vec<f64>,
    pub v: Array2<f64>,
}

impl Svd {
    /// Keep only the leading `k` triplets.
    pub fn truncate(mut self, k: usize) -> Self {
        let k = k.min(self.s.len());
        self.s.truncate(k);
        self.u = self.u.slice(ndarray::s![.., ..k]).to_owned();
        self.v = self.v.slice(ndarray::s![.., ..k]).to_owned();
        self
    }

    pub fn reconstruct(&self) -> Array2<f64> {
        let mut us = self.u.clone();
        for (mut col, s) in us.columns_mut().into_iter().zip(&self.s) {
            col *= *s;
        }
        us.dot(&self.v.t())
    }
}

const MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD.
///
/// Orthogonalizes the columns of A by plane rotations until every pair is
/// orthogonal to relative precision 1e-15; the column norms are then the
/// singular values.
pub fn jacobi_svd(a: ArrayView2<f64>) -> Svd {
    let (m, n) = a.dim();
    if m < n {
        let t = jacobi_svd(a.t());
        return Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        };
    }

    let mut cols: Vec<Vec<f64>> = a.columns().into_iter().map(|c| c.to_vec()).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let mut norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x * x).sum()).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                let (lo, hi) = vcols.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                norms[p] = sq_norm(&cols[p]);
                norms[q] = sq_norm(&cols[q]);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let sig: Vec<f64> = norms.iter().map(|x| x.sqrt()).collect();
    order.sort_by(|&x, &y| sig[y].total_cmp(&sig[x]));

    let mut u = Array2::zeros((m, n));
    let mut v = Array2::zeros((n, n));
    let mut s = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let sj = sig[j];
        s.push(sj);
        if sj > 0.0 {
            for i in 0..m {
                u[[i, k]] = cols[j][i] / sj;
            }
        }
        for i in 0..n {
            v[[i, k]] = vcols[j][i];
        }
    }
    Svd { u, s, v }
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

#[inline]
fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

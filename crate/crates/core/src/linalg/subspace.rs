use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2, Axis};

use super::jacobi::{jacobi_svd, Svd};
use crate::rng::{stream, Stream};

/// Jacobi is used for dense factorizations up to this many m·n·min(m,n) flops.
const JACOBI_WORK_LIMIT: f64 = 2e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubspaceOptions {
    /// Stop once ‖Aᵀu_i − σ_i v_i‖ ≤ tol·σ₁ for every requested triplet.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SubspaceOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
            seed: 0,
        }
    }
}

/// Complete thin SVD.
///
/// Small problems go through [`jacobi_svd`]. Larger ones form the Gram
/// matrix of the short side and use a symmetric eigensolver; singular values
/// far below the largest one lose relative accuracy on that route.
pub fn full_svd(a: ArrayView2<f64>) -> Svd {
    let (m, n) = a.dim();
    let d = m.min(n);
    if (m as f64) * (n as f64) * (d as f64) <= JACOBI_WORK_LIMIT {
        return jacobi_svd(a);
    }
    if m < n {
        let t = full_svd(a.t());
        return Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        };
    }
    let gram = a.t().dot(&a);
    let (s, v) = gram_eigen(&gram, n);
    let u = left_from_right(a, &v, &s);
    Svd { u, s, v }
}

/// Leading `k` singular triplets of `a`.
///
/// Uses block subspace iteration on AᵀA with Rayleigh–Ritz extraction when
/// `k` is small relative to min(m, n); otherwise falls back to [`full_svd`].
/// `start` optionally seeds the right subspace (n×j, any j).
pub fn top_svd(
    a: ArrayView2<f64>,
    k: usize,
    start: Option<ArrayView2<f64>>,
    opts: &SubspaceOptions,
) -> Svd {
    let (m, n) = a.dim();
    let d = m.min(n);
    let k = k.clamp(1, d);
    if 2 * k >= d || d <= 32 {
        return full_svd(a).truncate(k);
    }
    let width = (k + (k / 10).max(5)).min(d);
    let mut rng = Stream::substream(opts.seed, stream::SUBSPACE_START);

    let mut v = Array2::<f64>::zeros((n, width));
    let mut filled = 0;
    if let Some(st) = start {
        if st.nrows() == n {
            let take = st.ncols().min(width);
            v.slice_mut(ndarray::s![.., ..take])
                .assign(&st.slice(ndarray::s![.., ..take]));
            filled = take;
        }
    }
    for j in filled..width {
        for i in 0..n {
            v[[i, j]] = rng.normal();
        }
    }
    orthonormalize_columns(&mut v, &mut rng);

    let mut result = None;
    for _ in 0..opts.max_iter.max(1) {
        let w = a.dot(&v);
        let (s, z) = gram_eigen(&w.t().dot(&w), width);
        let right = v.dot(&z);
        let left = left_from_right_product(w.dot(&z), &s);
        let t = a.t().dot(&left);
        let scale = s[0].max(f64::MIN_POSITIVE);
        let worst = (0..k)
            .map(|j| {
                let d = &t.column(j) - &(&right.column(j) * s[j]);
                d.dot(&d).sqrt()
            })
            .fold(0.0f64, f64::max);
        let done = worst <= opts.tol * scale;
        result = Some(Svd { u: left, s, v: right });
        if done {
            break;
        }
        v = t;
        orthonormalize_columns(&mut v, &mut rng);
    }
    result.expect("at least one iteration").truncate(k)
}

/// Eigen-decomposition of a symmetric Gram matrix as (√λ descending, vectors).
fn gram_eigen(gram: &Array2<f64>, dim: usize) -> (Vec<f64>, Array2<f64>) {
    let g = DMatrix::from_fn(dim, dim, |i, j| 0.5 * (gram[[i, j]] + gram[[j, i]]));
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let s: Vec<f64> = order
        .iter()
        .map(|&j| eig.eigenvalues[j].max(0.0).sqrt())
        .collect();
    let vecs = Array2::from_shape_fn((dim, dim), |(i, c)| eig.eigenvectors[(i, order[c])]);
    (s, vecs)
}

fn left_from_right(a: ArrayView2<f64>, v: &Array2<f64>, s: &[f64]) -> Array2<f64> {
    left_from_right_product(a.dot(v), s)
}

/// Scales the columns of `u = A·v` by 1/σ, zeroing columns with negligible σ.
fn left_from_right_product(mut u: Array2<f64>, s: &[f64]) -> Array2<f64> {
    let floor = s.first().copied().unwrap_or(0.0) * 1e-13;
    for (mut col, &sj) in u.axis_iter_mut(Axis(1)).zip(s) {
        if sj > floor && sj > 0.0 {
            col /= sj;
        } else {
            col.fill(0.0);
        }
    }
    u
}

/// Modified Gram–Schmidt with one re-orthogonalization pass. Columns that
/// collapse numerically are replaced by fresh random directions.
pub fn orthonormalize_columns(a: &mut Array2<f64>, rng: &mut Stream) {
    let (m, l) = a.dim();
    let mut cols: Vec<Vec<f64>> = a.columns().into_iter().map(|c| c.to_vec()).collect();
    for j in 0..l {
        let mut attempts = 0;
        loop {
            let before = super::norm2(&cols[j]);
            for _ in 0..2 {
                let (done, rest) = cols.split_at_mut(j);
                let cj = &mut rest[0];
                for q in done.iter() {
                    let proj: f64 = q.iter().zip(cj.iter()).map(|(x, y)| x * y).sum();
                    for (c, x) in cj.iter_mut().zip(q) {
                        *c -= proj * x;
                    }
                }
            }
            let after = super::normalize(&mut cols[j]);
            if after > 1e-10 * before && after > 0.0 {
                break;
            }
            attempts += 1;
            assert!(attempts < 10, "unable to complete an orthonormal basis");
            for x in cols[j].iter_mut() {
                *x = rng.normal();
            }
        }
    }
    for (j, c) in cols.into_iter().enumerate() {
        for i in 0..m {
            a[[i, j]] = c[i];
        }
    }
}

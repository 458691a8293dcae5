//! Dense kernels: the operator abstraction, one-sided Jacobi SVD, and the
//! truncated SVD used by singular value thresholding.

mod jacobi;
mod operator;
mod subspace;

pub use jacobi::{jacobi_svd, Svd};
pub use operator::LinearOperator;
pub use subspace::{full_svd, orthonormalize_columns, top_svd, SubspaceOptions};

/// Euclidean norm of a slice.
pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Plain dot product with eight independent accumulators.
#[inline]
pub fn dot_unrolled(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Scales `x` to unit norm in place and returns the original norm.
pub fn normalize(x: &mut [f64]) -> f64 {
    let n = norm2(x);
    if n > 0.0 {
        for v in x.iter_mut() {
            *v /= n;
        }
    }
    n
}

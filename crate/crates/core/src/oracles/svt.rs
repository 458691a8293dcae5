use ndarray::{Array2, ArrayView2};

use crate::error::{CpcpError, Result};
use crate::linalg::{full_svd, top_svd, SubspaceOptions, Svd};
use crate::model::LowRankIterate;

/// Result of D_τ(Y) = U·max(Σ − τ, 0)·Vᵀ.
#[derive(Debug, Clone)]
pub struct SvtOutput {
    /// Retained triplets with shrunk singular values (all > 0).
    pub svd: Svd,
    /// Number of singular values of Y above τ.
    pub svp: usize,
    /// Number of triplets actually computed.
    pub computed: usize,
    /// Right singular vectors of every computed triplet, for warm starts.
    pub basis: Array2<f64>,
}

impl SvtOutput {
    pub fn to_low_rank(&self, dense_cache: bool) -> LowRankIterate {
        LowRankIterate::from_factors(self.svd.u.view(), &self.svd.s, self.svd.v.view(), dense_cache)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        self.svd.reconstruct()
    }

    /// ‖D_τ(Y)‖_* = Σ max(σ_i − τ, 0).
    pub fn nuclear_norm(&self) -> f64 {
        self.svd.s.iter().sum()
    }
}

/// Initial partial-SVD width max(1, round(d/10)).
pub fn initial_sv(d: usize) -> usize {
    ((d as f64 / 10.0).round() as usize).max(1)
}

/// Next partial-SVD width from the current width `sv` and the count `svp`
/// of values found above the threshold.
pub fn sv_heuristic(sv: usize, svp: usize, d: usize) -> usize {
    if svp < sv {
        (svp + 1).min(d)
    } else {
        (svp + (0.05 * d as f64).round() as usize).min(d)
    }
}

/// Singular value thresholding with a partial SVD of `sv_hint` triplets.
pub fn singular_value_threshold(y: ArrayView2<f64>, tau: f64, sv_hint: usize) -> Result<SvtOutput> {
    singular_value_threshold_warm(y, tau, sv_hint, None, &SubspaceOptions::default())
}

/// As [`singular_value_threshold`], seeding the subspace iteration with
/// `start` (typically the previous call's `basis`).
///
/// When the smallest computed value still exceeds τ the computation is
/// redone with the full spectrum, so the result never misses a value above τ.
pub fn singular_value_threshold_warm(
    y: ArrayView2<f64>,
    tau: f64,
    sv_hint: usize,
    start: Option<ArrayView2<f64>>,
    opts: &SubspaceOptions,
) -> Result<SvtOutput> {
    let (m, n) = y.dim();
    let d = m.min(n);
    if d == 0 {
        return Err(CpcpError::dims("nonempty matrix", format!("{m}x{n}")));
    }
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(CpcpError::param("tau", format!("must be finite and >= 0, got {tau}")));
    }
    let k = sv_hint.clamp(1, d);
    let mut svd = top_svd(y, k, start, opts);
    if svd.s.len() < d && svd.s.last().is_some_and(|&s| s > tau) {
        svd = full_svd(y);
    }
    let computed = svd.s.len();
    let basis = svd.v.clone();
    let svp = svd.s.iter().take_while(|&&s| s > tau).count();
    let mut kept = svd.truncate(svp);
    for s in &mut kept.s {
        *s -= tau;
    }
    Ok(SvtOutput {
        svd: kept,
        svp,
        computed,
        basis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::jacobi_svd;
    use crate::rng::Stream;
    use ndarray::{array, Array2};

    fn full_shrink(y: &Array2<f64>, tau: f64) -> Array2<f64> {
        let mut svd = jacobi_svd(y.view());
        for s in &mut svd.s {
            *s = (*s - tau).max(0.0);
        }
        svd.reconstruct()
    }

    fn frob(a: &Array2<f64>) -> f64 {
        a.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn diagonal_example() {
        let y = array![[5.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 0.5]];
        let out = singular_value_threshold(y.view(), 1.0, 1).unwrap();
        assert_eq!(out.svp, 2);
        let expect = array![[4.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]];
        assert!(frob(&(out.to_dense() - expect)) < 1e-12);
        assert!((out.nuclear_norm() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_above_spectrum_gives_zero() {
        let y = array![[1.0, 2.0], [3.0, 4.0]];
        let out = singular_value_threshold(y.view(), 100.0, 2).unwrap();
        assert_eq!(out.svp, 0);
        assert_eq!(out.to_dense(), Array2::<f64>::zeros((2, 2)));
        assert!(singular_value_threshold(y.view(), -1.0, 1).is_err());
        let empty = Array2::<f64>::zeros((0, 3));
        assert!(singular_value_threshold(empty.view(), 1.0, 1).is_err());
    }

    #[test]
    fn heuristic_values() {
        assert_eq!(sv_heuristic(10, 4, 100), 5);
        assert_eq!(sv_heuristic(10, 10, 100), 15);
        assert_eq!(sv_heuristic(100, 100, 100), 100);
        assert_eq!(initial_sv(200), 20);
        assert_eq!(initial_sv(4), 1);
    }

    #[test]
    fn matches_full_shrink_on_small_matrices() {
        let mut rng = Stream::new(77);
        for _ in 0..20 {
            let y = Array2::from_shape_fn((10, 8), |_| rng.normal());
            let tau = 2.0 * rng.uniform();
            let out = singular_value_threshold(y.view(), tau, 1).unwrap();
            assert!(frob(&(out.to_dense() - full_shrink(&y, tau))) < 1e-8);
            assert_eq!(out.svd.s.len(), out.svp);
            assert!(out.svd.s.iter().all(|&s| s > 0.0));
        }
    }

    #[test]
    fn partial_route_matches_full_shrink() {
        let mut rng = Stream::new(78);
        let (m, n, r) = (120, 90, 4);
        let a = Array2::from_shape_fn((m, r), |_| rng.normal());
        let b = Array2::from_shape_fn((r, n), |_| rng.normal());
        let y = a.dot(&b) + Array2::from_shape_fn((m, n), |_| 0.01 * rng.normal());
        let tau = 1.0;
        let out = singular_value_threshold(y.view(), tau, 6).unwrap();
        assert_eq!(out.svp, r);
        assert!(out.computed < 90);
        let err = frob(&(out.to_dense() - full_shrink(&y, tau)));
        assert!(err < 1e-8 * frob(&y), "{err}");
    }

    #[test]
    fn escalates_when_hint_too_small() {
        let mut rng = Stream::new(79);
        let y = Array2::from_shape_fn((80, 70), |_| rng.normal());
        let out = singular_value_threshold(y.view(), 0.5, 3).unwrap();
        assert!(out.svp > 3);
        assert_eq!(out.computed, 70);
        assert!(out.svp <= out.computed);
        assert!(frob(&(out.to_dense() - full_shrink(&y, 0.5))) < 1e-8);
    }
}

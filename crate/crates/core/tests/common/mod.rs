//! Reference computations shared by the integration tests. Everything here is
//! written against dense matrices and brute force, independent of the solver
//! code paths.
#![allow(dead_code)]

use cpcp::fwt::BoxQp;
use cpcp::linalg::jacobi_svd;
use cpcp::model::{MaskedValues, ObservationMask};
use cpcp::rng::Stream;
use ndarray::Array2;

pub fn random_matrix(rows: usize, cols: usize, rng: &mut Stream) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.normal())
}

pub fn random_vector(len: usize, scale: f64, rng: &mut Stream) -> Vec<f64> {
    (0..len).map(|_| scale * rng.normal()).collect()
}

/// ½‖P_Ω[L + S − M]‖²_F from dense L and S.
pub fn dense_data_fit(mask: &ObservationMask, observed: &MaskedValues, l: &Array2<f64>, s: &Array2<f64>) -> f64 {
    0.5 * mask
        .iter()
        .zip(observed.as_slice())
        .map(|((i, j), m)| {
            let r = l[[i, j]] + s[[i, j]] - m;
            r * r
        })
        .sum::<f64>()
}

pub fn dense_nuclear_norm(a: &Array2<f64>) -> f64 {
    jacobi_svd(a.view()).s.iter().sum()
}

pub fn dense_l1(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

pub fn frobenius_distance(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// ℓ1-ball projection by bisection on the threshold θ of
/// x = sign(y)·max(|y| − θ, 0).
pub fn bisection_project_l1(y: &[f64], beta: f64) -> Vec<f64> {
    let l1: f64 = y.iter().map(|v| v.abs()).sum();
    if l1 <= beta {
        return y.to_vec();
    }
    let mass = |theta: f64| y.iter().map(|v| (v.abs() - theta).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, y.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > beta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    y.iter().map(|v| v.signum() * (v.abs() - theta).max(0.0)).collect()
}

/// Minimum of the box QP over a 101×101 grid on [0, 1]².
pub fn grid_minimum(qp: &BoxQp) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..=100 {
        for j in 0..=100 {
            best = best.min(qp.value(i as f64 / 100.0, j as f64 / 100.0));
        }
    }
    best
}

/// U diag(max(σ − τ, 0)) Vᵀ via a full Jacobi SVD.
pub fn full_svd_shrink(a: &Array2<f64>, tau: f64) -> Array2<f64> {
    let svd = jacobi_svd(a.view());
    let mut out = Array2::zeros(a.dim());
    for (k, &s) in svd.s.iter().enumerate() {
        let shrunk = (s - tau).max(0.0);
        if shrunk == 0.0 {
            continue;
        }
        let u = svd.u.column(k);
        let v = svd.v.column(k);
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                out[[i, j]] += shrunk * u[i] * v[j];
            }
        }
    }
    out
}

pub fn relative_difference(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

//! Synthetic low-rank plus sparse instances, observation masks and the
//! default penalty weights.
//!
//! An instance is M = L0 + S0 + N0 with
//! L0 = A·B (A ∈ ℝ^{m×r}, B ∈ ℝ^{r×n} standard normal),
//! S0 = amplitude·Z ⊙ 1[U < fraction] and N0 = noise_std·Z′,
//! observed on a mask drawn uniformly without replacement.
//!
//! Every random component uses its own substream of the seed (see
//! [`crate::rng::stream`]), so changing e.g. the sampling ratio leaves L0,
//! S0 and N0 untouched. Draws are in row-major order.

use nalgebra::DMatrix;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{CpcpError, Result};
use crate::linalg::{full_svd, jacobi_svd};
use crate::model::{LowRankIterate, MaskedValues, ObservationMask, SparseIterate};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub sparse_fraction: f64,
    pub sparse_amplitude: f64,
    pub noise_std: f64,
    pub rho: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Rank 5, 1% gross errors of size 100·N(0,1), unit noise, full mask.
    pub fn standard(m: usize, n: usize, seed: u64) -> Self {
        Self {
            m,
            n,
            r: 5,
            sparse_fraction: 0.01,
            sparse_amplitude: 100.0,
            noise_std: 1.0,
            rho: 1.0,
            seed,
        }
    }

    /// As [`SyntheticSpec::standard`] with noise level 0.1.
    pub fn low_noise(m: usize, n: usize, seed: u64) -> Self {
        Self {
            noise_std: 0.1,
            ..Self::standard(m, n, seed)
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(CpcpError::param("m/n", "dimensions must be positive"));
        }
        if self.r > self.m.min(self.n) {
            return Err(CpcpError::param("r", format!("{} exceeds min(m, n)", self.r)));
        }
        if !(0.0..=1.0).contains(&self.sparse_fraction) {
            return Err(CpcpError::param("sparse_fraction", "must lie in [0, 1]"));
        }
        if !self.sparse_amplitude.is_finite() || !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(CpcpError::param("sparse_amplitude/noise_std", "must be finite, noise_std >= 0"));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(CpcpError::param("rho", format!("must lie in (0, 1], got {}", self.rho)));
        }
        Ok(())
    }
}

/// A generated instance with its ground truth.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub l0: Array2<f64>,
    /// Nonzero entries of S0 as ((i, j), value), row-major.
    pub s0: Vec<((usize, usize), f64)>,
    pub mask: ObservationMask,
    /// L0 + S0 + N0 at the mask positions.
    pub observed: MaskedValues,
    /// ‖L0‖_*.
    pub tau_l_true: f64,
    /// ‖S0‖_1.
    pub tau_s_true: f64,
}

impl GroundTruth {
    pub fn shape(&self) -> (usize, usize) {
        self.l0.dim()
    }

    pub fn s0_dense(&self) -> Array2<f64> {
        let mut s = Array2::zeros(self.l0.dim());
        for &((i, j), v) in &self.s0 {
            s[[i, j]] = v;
        }
        s
    }

    /// ‖L − L0‖_F / ‖L0‖_F.
    pub fn low_rank_error(&self, low_rank: &LowRankIterate) -> f64 {
        let l = low_rank.to_dense();
        let num: f64 = l.iter().zip(self.l0.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        let den: f64 = self.l0.iter().map(|x| x * x).sum();
        (num / den).sqrt()
    }

    /// ‖S − S0‖_F / ‖S0‖_F for S stored on the mask; ‖S‖_F when S0 = 0.
    pub fn sparse_error(&self, sparse: &SparseIterate) -> f64 {
        let mut diff = sparse.to_dense(&self.mask);
        for &((i, j), v) in &self.s0 {
            diff[[i, j]] -= v;
        }
        let num: f64 = diff.iter().map(|x| x * x).sum();
        let den: f64 = self.s0.iter().map(|(_, v)| v * v).sum();
        if den > 0.0 {
            (num / den).sqrt()
        } else {
            num.sqrt()
        }
    }
}

pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<GroundTruth> {
    spec.validate()?;
    let (m, n, r) = (spec.m, spec.n, spec.r);

    let mut rng = Stream::substream(spec.seed, stream::LOW_RANK);
    let a = Array2::from_shape_fn((m, r), |_| rng.normal());
    let b = Array2::from_shape_fn((r, n), |_| rng.normal());
    let l0 = a.dot(&b);
    let tau_l_true = low_rank_nuclear_norm(&a, &b, &l0);

    let mut support = Stream::substream(spec.seed, stream::SPARSE_SUPPORT);
    let mut values = Stream::substream(spec.seed, stream::SPARSE_VALUES);
    let mut s0 = Vec::new();
    for i in 0..m {
        for j in 0..n {
            if support.uniform() < spec.sparse_fraction {
                let v = spec.sparse_amplitude * values.normal();
                if v != 0.0 {
                    s0.push(((i, j), v));
                }
            }
        }
    }
    let tau_s_true = s0.iter().map(|(_, v)| v.abs()).sum();

    let mut m_full = l0.clone();
    for &((i, j), v) in &s0 {
        m_full[[i, j]] += v;
    }
    if spec.noise_std > 0.0 {
        let mut noise = Stream::substream(spec.seed, stream::NOISE);
        for x in m_full.iter_mut() {
            *x += spec.noise_std * noise.normal();
        }
    }

    let mask = sample_mask(m, n, spec.rho, spec.seed)?;
    let observed = MaskedValues(mask.iter().map(|(i, j)| m_full[[i, j]]).collect());
    Ok(GroundTruth {
        l0,
        s0,
        mask,
        observed,
        tau_l_true,
        tau_s_true,
    })
}

/// ‖A·B‖_* from the r×n factor R_A·B, where AᵀA = R_AᵀR_A.
fn low_rank_nuclear_norm(a: &Array2<f64>, b: &Array2<f64>, product: &Array2<f64>) -> f64 {
    let r = a.ncols();
    if r == 0 {
        return 0.0;
    }
    let gram = a.t().dot(a);
    let g = DMatrix::from_fn(r, r, |i, j| gram[[i, j]]);
    match g.cholesky() {
        Some(ch) => {
            let lower = ch.l();
            let ra = Array2::from_shape_fn((r, r), |(i, j)| lower[(j, i)]);
            jacobi_svd(ra.dot(b).view()).s.iter().sum()
        }
        None => full_svd(product.view()).s.iter().sum(),
    }
}

/// Exactly round(ρ·m·n) distinct positions, uniform without replacement.
pub fn sample_mask(m: usize, n: usize, rho: f64, seed: u64) -> Result<ObservationMask> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(CpcpError::param("rho", format!("must lie in (0, 1], got {rho}")));
    }
    let total = m
        .checked_mul(n)
        .ok_or_else(|| CpcpError::param("m/n", "m·n overflows"))?;
    let count = (rho * total as f64).round() as usize;
    if count == total {
        return ObservationMask::full(m, n);
    }
    if count == 0 {
        return Err(CpcpError::param("rho", "round(rho·m·n) is zero"));
    }
    let mut rng = Stream::substream(seed, stream::MASK);
    let picks = rand::seq::index::sample(rng.rng_mut(), total, count);
    let entries = picks.into_iter().map(|p| (p / n, p % n)).collect();
    ObservationMask::new(m, n, entries)
}

/// λ_L = δρ‖P_Ω M‖_F and λ_S = δ√ρ‖P_Ω M‖_F/√max(m, n).
pub fn default_weights(mask: &ObservationMask, observed: &MaskedValues, delta: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0) {
        return Err(CpcpError::param("delta", format!("must be > 0, got {delta}")));
    }
    if observed.len() != mask.len() {
        return Err(CpcpError::dims(mask.len(), observed.len()));
    }
    let rho = mask.rho();
    let norm = observed.norm();
    let big = mask.rows().max(mask.cols()) as f64;
    Ok((delta * rho * norm, delta * rho.sqrt() * norm / big.sqrt()))
}

/// λ_L = 0.005‖P_Ω M‖_F and λ_S = λ_L/√max(m, n).
pub fn scaled_weights(mask: &ObservationMask, observed: &MaskedValues) -> (f64, f64) {
    let lambda_l = 0.005 * observed.norm();
    (lambda_l, lambda_l / (mask.rows().max(mask.cols()) as f64).sqrt())
}

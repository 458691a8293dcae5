use ndarray::Array2;

use super::{LowRankIterate, MaskedValues, ObservationMask};

/// Sparse component S, stored on Ω only.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseIterate {
    pub values: MaskedValues,
}

impl SparseIterate {
    pub fn zeros(mask: &ObservationMask) -> Self {
        Self {
            values: MaskedValues::zeros(mask.len()),
        }
    }

    pub fn l1(&self) -> f64 {
        self.values.l1()
    }

    pub fn nnz(&self) -> usize {
        self.values.nnz()
    }

    pub fn to_dense(&self, mask: &ObservationMask) -> Array2<f64> {
        self.values.to_dense(mask)
    }

    /// `S ← (1 − γ)·S + γ·value·e_p` for a one-sparse direction at mask
    /// position `p`.
    pub fn convex_step(&mut self, gamma: f64, position: usize, value: f64) {
        self.values.scale(1.0 - gamma);
        self.values.0[position] += gamma * value;
    }
}

/// A point of the epigraph reformulation: (L, S, t_L, t_S) with
/// ‖L‖_* ≤ t_L and ‖S‖_1 ≤ t_S.
#[derive(Debug, Clone)]
pub struct EpigraphIterate {
    pub low_rank: LowRankIterate,
    pub sparse: SparseIterate,
    pub t_l: f64,
    pub t_s: f64,
}

impl EpigraphIterate {
    pub fn zeros(mask: &ObservationMask) -> Self {
        Self {
            low_rank: LowRankIterate::zeros(mask.rows(), mask.cols()),
            sparse: SparseIterate::zeros(mask),
            t_l: 0.0,
            t_s: 0.0,
        }
    }

    /// Epigraph constraints up to `1e-8·max(1, t)`.
    pub fn is_feasible(&self) -> bool {
        let slack = |t: f64| 1e-8 * t.max(1.0);
        self.low_rank.nuclear_norm() <= self.t_l + slack(self.t_l)
            && self.sparse.l1() <= self.t_s + slack(self.t_s)
    }
}

use super::{CpcpProblem, LowRankIterate, MaskedValues, ObservationMask, SparseIterate};
use crate::error::{CpcpError, Result};

/// R = P_Ω[L + S − M], maintained incrementally by the solvers.
///
/// R is also the gradient of the data-fit term with respect to both L and S.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub values: MaskedValues,
}

impl Residual {
    /// Residual of the zero iterate: −P_Ω[M].
    pub fn initial(problem: &CpcpProblem) -> Self {
        let mut values = problem.observed().clone();
        values.scale(-1.0);
        Self { values }
    }

    pub fn from_scratch(problem: &CpcpProblem, low_rank: &LowRankIterate, sparse: &SparseIterate) -> Self {
        let mut values = low_rank.masked_entries(problem.mask());
        values.axpy(1.0, &sparse.values);
        values.axpy(-1.0, problem.observed());
        Self { values }
    }

    /// ½‖R‖²_F.
    pub fn data_fit(&self) -> f64 {
        0.5 * self.values.norm_sq()
    }

    /// `R[i,j] += gamma · scale · u_i v_j` on Ω.
    pub fn apply_rank_one(
        &mut self,
        mask: &ObservationMask,
        gamma: f64,
        scale: f64,
        u: &[f64],
        v: &[f64],
    ) -> Result<()> {
        if u.len() != mask.rows() || v.len() != mask.cols() {
            return Err(CpcpError::dims(
                format!("u: {}, v: {}", mask.rows(), mask.cols()),
                format!("u: {}, v: {}", u.len(), v.len()),
            ));
        }
        if self.values.len() != mask.len() {
            return Err(CpcpError::dims(mask.len(), self.values.len()));
        }
        let c = gamma * scale;
        if c == 0.0 {
            return Ok(());
        }
        let cols = mask.col_indices();
        for (&ui, w) in u.iter().zip(mask.row_offsets().windows(2)) {
            let cu = c * ui;
            let values = &mut self.values.0[w[0]..w[1]];
            if values.len() == v.len() {
                for (r, &vj) in values.iter_mut().zip(v) {
                    *r += cu * vj;
                }
            } else {
                for (r, &j) in values.iter_mut().zip(&cols[w[0]..w[1]]) {
                    *r += cu * v[j as usize];
                }
            }
        }
        Ok(())
    }

    /// `R[p] += delta` at a single mask position (a one-sparse change of S).
    pub fn apply_one_sparse(&mut self, position: usize, delta: f64) {
        self.values.0[position] += delta;
    }

    /// ‖R_incremental − R_scratch‖_F and the tolerance it must respect:
    /// `1e-9·(‖P_Ω L‖_F + ‖S‖_F + ‖P_Ω M‖_F)`.
    pub fn drift(&self, problem: &CpcpProblem, low_rank: &LowRankIterate, sparse: &SparseIterate) -> (f64, f64) {
        let l_masked = low_rank.masked_entries(problem.mask());
        let mut diff = self.values.clone();
        diff.axpy(-1.0, &l_masked);
        diff.axpy(-1.0, &sparse.values);
        diff.axpy(1.0, problem.observed());
        let tol = 1e-9 * (l_masked.norm() + sparse.values.norm() + problem.observed().norm());
        (diff.norm(), tol)
    }

    /// Panics when the incremental residual drifted from a scratch recompute.
    pub(crate) fn assert_consistent(&self, problem: &CpcpProblem, low_rank: &LowRankIterate, sparse: &SparseIterate, k: usize) {
        let (drift, tol) = self.drift(problem, low_rank, sparse);
        assert!(
            drift <= tol.max(1e-300),
            "residual drift {drift:e} exceeds {tol:e} at iteration {k}"
        );
    }
}

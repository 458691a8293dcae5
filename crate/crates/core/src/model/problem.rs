use ndarray::Array2;

use super::{project_onto_mask, MaskedValues, ObservationMask};
use crate::error::{CpcpError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Formulation {
    /// ‖L‖_* ≤ τ_L, ‖S‖_1 ≤ τ_S.
    Constrained { tau_l: f64, tau_s: f64 },
    /// Weights on ‖L‖_* and ‖S‖_1 in the objective.
    Penalized { lambda_l: f64, lambda_s: f64 },
}

/// Observed data P_Ω[M] together with the problem variant.
///
/// Immutable once built; solvers borrow it.
#[derive(Debug, Clone)]
pub struct CpcpProblem {
    mask: ObservationMask,
    observed: MaskedValues,
    formulation: Formulation,
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(CpcpError::param(name, format!("must be finite and > 0, got {x}")))
    }
}

impl CpcpProblem {
    pub fn new(mask: ObservationMask, observed: MaskedValues, formulation: Formulation) -> Result<Self> {
        if observed.len() != mask.len() {
            return Err(CpcpError::dims(
                format!("{} observed values", mask.len()),
                observed.len(),
            ));
        }
        if observed.0.iter().any(|x| !x.is_finite()) {
            return Err(CpcpError::param("observed", "contains non-finite values"));
        }
        match formulation {
            Formulation::Constrained { tau_l, tau_s } => {
                positive("tau_L", tau_l)?;
                positive("tau_S", tau_s)?;
            }
            Formulation::Penalized { lambda_l, lambda_s } => {
                positive("lambda_L", lambda_l)?;
                positive("lambda_S", lambda_s)?;
            }
        }
        Ok(Self {
            mask,
            observed,
            formulation,
        })
    }

    pub fn constrained(mask: ObservationMask, observed: MaskedValues, tau_l: f64, tau_s: f64) -> Result<Self> {
        Self::new(mask, observed, Formulation::Constrained { tau_l, tau_s })
    }

    pub fn penalized(mask: ObservationMask, observed: MaskedValues, lambda_l: f64, lambda_s: f64) -> Result<Self> {
        Self::new(mask, observed, Formulation::Penalized { lambda_l, lambda_s })
    }

    /// Observes `dense` on `mask`.
    pub fn from_dense(mask: ObservationMask, dense: &Array2<f64>, formulation: Formulation) -> Result<Self> {
        let observed = project_onto_mask(&mask, dense)?;
        Self::new(mask, observed, formulation)
    }

    pub fn mask(&self) -> &ObservationMask {
        &self.mask
    }

    pub fn observed(&self) -> &MaskedValues {
        &self.observed
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn shape(&self) -> (usize, usize) {
        self.mask.shape()
    }

    pub fn radii(&self) -> Result<(f64, f64)> {
        match self.formulation {
            Formulation::Constrained { tau_l, tau_s } => Ok((tau_l, tau_s)),
            _ => Err(CpcpError::WrongFormulation {
                expected: "norm-constrained",
            }),
        }
    }

    pub fn weights(&self) -> Result<(f64, f64)> {
        match self.formulation {
            Formulation::Penalized { lambda_l, lambda_s } => Ok((lambda_l, lambda_s)),
            _ => Err(CpcpError::WrongFormulation { expected: "penalized" }),
        }
    }

    /// Same data, different variant.
    pub fn with_formulation(&self, formulation: Formulation) -> Result<Self> {
        Self::new(self.mask.clone(), self.observed.clone(), formulation)
    }
}

use super::power::{leading_singular_pair_from, PowerOptions, SingularTriplet};
use crate::error::{CpcpError, Result};
use crate::linalg::LinearOperator;

/// `coeff · u vᵀ` with unit u, v.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneDirection {
    pub coeff: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct NuclearLmo {
    /// −τ·u vᵀ for the leading pair (u, v) of the gradient.
    pub direction: RankOneDirection,
    /// ⟨G, direction⟩ = −τ·σ_max(G).
    pub linear_value: f64,
    pub triplet: SingularTriplet,
}

/// argmin over ‖X‖_* ≤ τ of ⟨G, X⟩.
pub fn lmo_nuclear<A: LinearOperator + ?Sized>(
    grad: &A,
    tau: f64,
    warm_start: Option<&[f64]>,
    opts: &PowerOptions,
) -> Result<NuclearLmo> {
    if !(tau >= 0.0) {
        return Err(CpcpError::param("tau", format!("must be >= 0, got {tau}")));
    }
    let triplet = leading_singular_pair_from(grad, warm_start, opts);
    Ok(NuclearLmo {
        direction: RankOneDirection {
            coeff: -tau,
            u: triplet.u.clone(),
            v: triplet.v.clone(),
        },
        linear_value: -tau * triplet.sigma,
        triplet,
    })
}

/// `value · e_i e_jᵀ` at a mask position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneSparseDirection {
    pub position: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Lmo {
    pub direction: OneSparseDirection,
    /// ⟨G, direction⟩ = −τ·‖G‖_∞.
    pub linear_value: f64,
    /// ‖G‖_∞.
    pub max_abs: f64,
}

/// argmin over ‖X‖_1 ≤ τ of ⟨G, X⟩ for a mask-supported G.
///
/// The largest |G_ij| wins; ties go to the first position in row-major order.
pub fn lmo_l1(grad: &[f64], tau: f64) -> Result<L1Lmo> {
    if !(tau >= 0.0) {
        return Err(CpcpError::param("tau", format!("must be >= 0, got {tau}")));
    }
    if grad.is_empty() {
        return Err(CpcpError::param("grad", "empty gradient"));
    }
    let mut best = 0;
    let mut best_abs = grad[0].abs();
    for (p, g) in grad.iter().enumerate().skip(1) {
        if g.abs() > best_abs {
            best = p;
            best_abs = g.abs();
        }
    }
    let g = grad[best];
    let sign = if g > 0.0 {
        1.0
    } else if g < 0.0 {
        -1.0
    } else {
        0.0
    };
    Ok(L1Lmo {
        direction: OneSparseDirection {
            position: best,
            value: -tau * sign,
        },
        linear_value: -tau * best_abs,
        max_abs: best_abs,
    })
}

//! Proximal-gradient baselines for the penalized problem.
//!
//! Both use step ½ (the data-fit gradient is 2-Lipschitz in (L, S)):
//!
//! ```text
//! L⁺ = D_{λ_L/2}[L̂ − ½G],   S⁺ = T_{λ_S/2}[Ŝ − ½G],   G = P_Ω[L̂ + Ŝ − M]
//! ```
//!
//! ISTA evaluates at the current iterate; FISTA at the extrapolated point
//! x̂ = x⁺ + ((t_k − 1)/t_{k+1})(x⁺ − x) with t₀ = 1. D is singular value
//! thresholding through a partial SVD whose width follows [`sv_heuristic`].
//! L is held dense, so m·n is checked against `memory_budget` up front.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{CpcpError, Result};
use crate::linalg::SubspaceOptions;
use crate::model::{
    CpcpProblem, IterationEvent, IterationRecord, LowRankIterate, MaskedValues, Observer, Residual, Silent, Solution,
    SolveStatus, SolverTrace, SparseIterate, Step, Stopwatch, DENSE_CACHE_LIMIT,
};
use crate::oracles::{initial_sv, shrink, singular_value_threshold_warm, sv_heuristic, SvtOutput};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IstaConfig {
    #[serde(rename = "lambda_L")]
    pub lambda_l: f64,
    #[serde(rename = "lambda_S")]
    pub lambda_s: f64,
    pub max_iter: usize,
    /// Stop at the first iterate whose objective is at or below this value.
    pub target_objective: Option<f64>,
    /// Largest m·n for which the dense iterate may be allocated.
    pub memory_budget: usize,
    #[serde(skip)]
    pub subspace: SubspaceOptions,
}

impl Default for IstaConfig {
    fn default() -> Self {
        Self {
            lambda_l: 1.0,
            lambda_s: 1.0,
            max_iter: 500,
            target_objective: None,
            memory_budget: 400_000_000,
            subspace: SubspaceOptions::default(),
        }
    }
}

impl IstaConfig {
    pub fn new(lambda_l: f64, lambda_s: f64) -> Self {
        Self {
            lambda_l,
            lambda_s,
            ..Self::default()
        }
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target_objective = Some(target);
        self
    }

    fn validate(&self, problem: &CpcpProblem) -> Result<()> {
        let (lambda_l, lambda_s) = problem.weights()?;
        if lambda_l != self.lambda_l || lambda_s != self.lambda_s {
            return Err(CpcpError::param(
                "lambda_L/lambda_S",
                format!(
                    "config ({}, {}) disagrees with problem ({lambda_l}, {lambda_s})",
                    self.lambda_l, self.lambda_s
                ),
            ));
        }
        if self.max_iter == 0 {
            return Err(CpcpError::param("max_iter", "must be >= 1"));
        }
        let (m, n) = problem.shape();
        let entries = m.saturating_mul(n);
        if entries > self.memory_budget {
            return Err(CpcpError::MemoryBudget {
                entries,
                budget: self.memory_budget,
            });
        }
        Ok(())
    }
}

pub fn solve_ista(problem: &CpcpProblem, config: &IstaConfig) -> Result<Solution> {
    solve_ista_observed(problem, config, &mut Silent)
}

pub fn solve_ista_observed(problem: &CpcpProblem, config: &IstaConfig, observer: &mut dyn Observer) -> Result<Solution> {
    run(problem, config, false, observer)
}

pub fn solve_fista(problem: &CpcpProblem, config: &IstaConfig) -> Result<Solution> {
    solve_fista_observed(problem, config, &mut Silent)
}

pub fn solve_fista_observed(problem: &CpcpProblem, config: &IstaConfig, observer: &mut dyn Observer) -> Result<Solution> {
    run(problem, config, true, observer)
}

/// t_{k+1} = (1 + √(1 + 4t_k²))/2.
pub fn fista_momentum(t: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
}

/// P_Ω[L] + S − M for dense L.
fn residual_of(problem: &CpcpProblem, l: &Array2<f64>, s: &MaskedValues) -> Residual {
    let values = problem
        .mask()
        .iter()
        .zip(s.as_slice())
        .zip(problem.observed().as_slice())
        .map(|(((i, j), s), m)| l[[i, j]] + s - m)
        .collect();
    Residual {
        values: MaskedValues(values),
    }
}

fn low_rank_of(svt: Option<&SvtOutput>, m: usize, n: usize, dense_cache: bool) -> LowRankIterate {
    match svt {
        Some(out) => out.to_low_rank(dense_cache),
        None => LowRankIterate::zeros_with_cache(m, n, dense_cache),
    }
}

fn run(problem: &CpcpProblem, config: &IstaConfig, accelerated: bool, observer: &mut dyn Observer) -> Result<Solution> {
    config.validate(problem)?;
    let (lambda_l, lambda_s) = (config.lambda_l, config.lambda_s);
    let mask = problem.mask();
    let (m, n) = problem.shape();
    let d = m.min(n);
    let clock = Stopwatch::start();

    let mut l = Array2::<f64>::zeros((m, n));
    let mut s = MaskedValues::zeros(mask.len());
    // extrapolated point; equal to (l, s) for ISTA
    let mut l_hat: Option<Array2<f64>> = None;
    let mut s_hat: Option<MaskedValues> = None;
    let mut nuclear = 0.0;
    let mut rank = 0;
    let mut momentum = 1.0;
    let mut sv = initial_sv(d);
    let mut last_svt: Option<SvtOutput> = None;
    let mut residual = Residual::initial(problem);
    let mut trace = SolverTrace::new();
    let mut status = SolveStatus::MaxIterations;

    let mut k = 0;
    loop {
        let objective = residual.data_fit() + lambda_l * nuclear + lambda_s * s.l1();
        let reached = config.target_objective.is_some_and(|t| objective <= t);
        if reached || k == config.max_iter {
            if reached {
                status = SolveStatus::Converged;
            }
            trace.push(IterationRecord {
                k,
                objective,
                dual_gap: None,
                step: Step::None,
                rank,
                nnz: s.nnz(),
                wall_nanos: clock.nanos(),
                u_l: None,
                u_s: None,
            });
            break;
        }

        let grad = match (&l_hat, &s_hat) {
            (Some(lh), Some(sh)) => residual_of(problem, lh, sh),
            _ => residual.clone(),
        };
        let mut y = l_hat.clone().unwrap_or_else(|| l.clone());
        for ((i, j), g) in mask.iter().zip(grad.values.as_slice()) {
            y[[i, j]] -= 0.5 * g;
        }
        let start = last_svt.as_ref().map(|o| o.basis.view());
        let svt = singular_value_threshold_warm(y.view(), 0.5 * lambda_l, sv, start, &config.subspace)?;
        drop(y);
        sv = sv_heuristic(sv, svt.svp, d);
        let l_next = svt.to_dense();
        let s_base = s_hat.as_ref().unwrap_or(&s);
        let s_next = MaskedValues(
            s_base
                .as_slice()
                .iter()
                .zip(grad.values.as_slice())
                .map(|(x, g)| shrink(x - 0.5 * g, 0.5 * lambda_s))
                .collect(),
        );

        if accelerated {
            let t_next = fista_momentum(momentum);
            let beta = (momentum - 1.0) / t_next;
            let mut lh = l_next.clone();
            lh.scaled_add(beta, &l_next);
            lh.scaled_add(-beta, &l);
            let mut sh = s_next.clone();
            sh.axpy(beta, &s_next);
            sh.axpy(-beta, &s);
            l_hat = Some(lh);
            s_hat = Some(sh);
            momentum = t_next;
        }

        trace.push(IterationRecord {
            k,
            objective,
            dual_gap: None,
            step: Step::Fixed(0.5),
            rank,
            nnz: s.nnz(),
            wall_nanos: clock.nanos(),
            u_l: None,
            u_s: None,
        });

        l = l_next;
        s = s_next;
        nuclear = svt.nuclear_norm();
        rank = svt.svp;
        residual = residual_of(problem, &l, &s);
        last_svt = Some(svt);
        let objective_after = residual.data_fit() + lambda_l * nuclear + lambda_s * s.l1();
        observer.observe(&IterationEvent {
            k,
            objective_before: objective,
            objective_half: objective_after,
            objective_after,
            low_rank: &low_rank_of(last_svt.as_ref(), m, n, false),
            sparse: &SparseIterate { values: s.clone() },
            residual: &residual,
            t_l: None,
            t_s: None,
        });
        k += 1;
    }

    Ok(Solution {
        low_rank: low_rank_of(last_svt.as_ref(), m, n, m * n <= DENSE_CACHE_LIMIT),
        sparse: SparseIterate { values: s },
        t_l: None,
        t_s: None,
        trace,
        status,
    })
}

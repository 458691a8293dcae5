//! Frank-Wolfe solvers for the norm-constrained problem
//!
//! ```text
//! min l(L, S) = ½‖P_Ω[L + S − M]‖²_F   s.t.  ‖L‖_* ≤ τ_L,  ‖S‖_1 ≤ τ_S.
//! ```
//!
//! [`solve_fw_constrained`] is the plain method with step 2/(k+2): every
//! iteration moves L toward a rank-one extreme point of the nuclear ball and
//! S toward a one-sparse extreme point of the ℓ1 ball. [`solve_fwp`] follows
//! the same step with a unit-step projected gradient step on S, which lets S
//! change on many entries per iteration.
//!
//! Both keep R = P_Ω[L + S − M] up to date with O(|Ω|) work per step, so an
//! iteration costs one leading singular pair of R plus linear passes over Ω.

use serde::{Deserialize, Serialize};

use crate::error::{CpcpError, Result};
use crate::model::{
    default_check_every, dot, CpcpProblem, IterationEvent, IterationRecord, LowRankIterate, Observer,
    Residual, Silent, Solution, SolveStatus, SolverTrace, SparseIterate, Step, Stopwatch,
};
use crate::oracles::{lmo_l1, lmo_nuclear, project_l1, L1Lmo, NuclearLmo, PowerOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstrainedConfig {
    #[serde(rename = "tau_L")]
    pub tau_l: f64,
    #[serde(rename = "tau_S")]
    pub tau_s: f64,
    pub max_iter: usize,
    /// Stop once the duality gap at the current iterate falls to this value.
    pub gap_tol: Option<f64>,
    /// Store the gap in the trace every this many iterations (the final
    /// record always carries it).
    pub record_gap_every: usize,
    #[serde(skip)]
    pub power: PowerOptions,
    /// Compare the incremental residual with a recomputation every this many
    /// iterations; `None` disables the check.
    pub check_every: Option<usize>,
    /// Force the dense copy of L on or off; `None` decides by size.
    pub dense_cache: Option<bool>,
}

impl Default for ConstrainedConfig {
    fn default() -> Self {
        Self {
            tau_l: 1.0,
            tau_s: 1.0,
            max_iter: 1000,
            gap_tol: None,
            record_gap_every: 1,
            power: PowerOptions::default(),
            check_every: default_check_every(),
            dense_cache: None,
        }
    }
}

impl ConstrainedConfig {
    pub fn new(tau_l: f64, tau_s: f64) -> Self {
        Self {
            tau_l,
            tau_s,
            ..Self::default()
        }
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    fn validate(&self, problem: &CpcpProblem) -> Result<()> {
        let (tau_l, tau_s) = problem.radii()?;
        if tau_l != self.tau_l || tau_s != self.tau_s {
            return Err(CpcpError::param(
                "tau_L/tau_S",
                format!(
                    "config ({}, {}) disagrees with problem ({tau_l}, {tau_s})",
                    self.tau_l, self.tau_s
                ),
            ));
        }
        if self.max_iter == 0 {
            return Err(CpcpError::param("max_iter", "must be >= 1"));
        }
        if self.record_gap_every == 0 {
            return Err(CpcpError::param("record_gap_every", "must be >= 1"));
        }
        if let Some(t) = self.gap_tol {
            if !(t >= 0.0) {
                return Err(CpcpError::param("gap_tol", format!("must be >= 0, got {t}")));
            }
        }
        Ok(())
    }
}

/// γ_k = 2/(k+2).
pub fn fw_step_size(k: usize) -> f64 {
    2.0 / (k as f64 + 2.0)
}

/// Surrogate duality gap ⟨x − v, ∇l(x)⟩ from the two LMO outputs at x.
///
/// With G = R = P_Ω[L + S − M], ⟨L + S, G⟩ = ⟨R + P_Ω M, R⟩ and the LMO values
/// supply ⟨V_L, G⟩ + ⟨V_S, G⟩, so no pass over L or S is needed.
pub fn duality_gap(problem: &CpcpProblem, residual: &Residual, lmo_l: &NuclearLmo, lmo_s: &L1Lmo) -> f64 {
    let r = residual.values.as_slice();
    let m = problem.observed().as_slice();
    let x_dot_g = dot(r, r) + dot(m, r);
    x_dot_g - lmo_l.linear_value - lmo_s.linear_value
}

pub fn solve_fw_constrained(problem: &CpcpProblem, config: &ConstrainedConfig) -> Result<Solution> {
    solve_fw_constrained_observed(problem, config, &mut Silent)
}

pub fn solve_fw_constrained_observed(
    problem: &CpcpProblem,
    config: &ConstrainedConfig,
    observer: &mut dyn Observer,
) -> Result<Solution> {
    run(problem, config, false, observer)
}

pub fn solve_fwp(problem: &CpcpProblem, config: &ConstrainedConfig) -> Result<Solution> {
    solve_fwp_observed(problem, config, &mut Silent)
}

pub fn solve_fwp_observed(
    problem: &CpcpProblem,
    config: &ConstrainedConfig,
    observer: &mut dyn Observer,
) -> Result<Solution> {
    run(problem, config, true, observer)
}

struct Lmos {
    low_rank: NuclearLmo,
    sparse: L1Lmo,
    gap: f64,
}

fn lmos_at(
    problem: &CpcpProblem,
    residual: &Residual,
    config: &ConstrainedConfig,
    warm: Option<&[f64]>,
) -> Result<Lmos> {
    let view = residual.values.view(problem.mask());
    let low_rank = lmo_nuclear(&view, config.tau_l, warm, &config.power)?;
    let sparse = lmo_l1(residual.values.as_slice(), config.tau_s)?;
    let gap = duality_gap(problem, residual, &low_rank, &sparse);
    Ok(Lmos { low_rank, sparse, gap })
}

fn run(
    problem: &CpcpProblem,
    config: &ConstrainedConfig,
    project: bool,
    observer: &mut dyn Observer,
) -> Result<Solution> {
    config.validate(problem)?;
    let mask = problem.mask();
    let (m, n) = problem.shape();
    let clock = Stopwatch::start();

    let mut low_rank = match config.dense_cache {
        Some(c) => LowRankIterate::zeros_with_cache(m, n, c),
        None => LowRankIterate::zeros(m, n),
    };
    let mut sparse = SparseIterate::zeros(mask);
    let mut residual = Residual::initial(problem);
    let mut trace = SolverTrace::new();
    let mut warm: Option<Vec<f64>> = None;
    let mut status = SolveStatus::MaxIterations;

    let mut k = 0;
    loop {
        let objective = residual.data_fit();
        let lmos = lmos_at(problem, &residual, config, warm.as_deref())?;
        let converged = config.gap_tol.is_some_and(|t| lmos.gap <= t);
        if converged || k == config.max_iter {
            if converged {
                status = SolveStatus::Converged;
            }
            trace.push(IterationRecord {
                k,
                objective,
                dual_gap: Some(lmos.gap),
                step: Step::None,
                rank: low_rank.rank(),
                nnz: sparse.nnz(),
                wall_nanos: clock.nanos(),
                u_l: None,
                u_s: None,
            });
            break;
        }

        let gamma = fw_step_size(k);
        let dir_l = &lmos.low_rank.direction;
        let dir_s = lmos.sparse.direction;

        // R ← (1 − γ)R + γ(P_Ω V_L + V_S − M)
        residual.values.scale(1.0 - gamma);
        residual.apply_rank_one(mask, gamma, dir_l.coeff, &dir_l.u, &dir_l.v)?;
        residual.apply_one_sparse(dir_s.position, gamma * dir_s.value);
        residual.values.axpy(-gamma, problem.observed());
        low_rank.convex_step(gamma, dir_l.coeff, &dir_l.u, &dir_l.v);
        sparse.convex_step(gamma, dir_s.position, dir_s.value);
        low_rank.maybe_compress();
        let objective_half = residual.data_fit();

        if project {
            let shifted: Vec<f64> = sparse
                .values
                .as_slice()
                .iter()
                .zip(residual.values.as_slice())
                .map(|(s, r)| s - r)
                .collect();
            let projected = project_l1(&shifted, config.tau_s)?;
            for ((r, s), p) in residual
                .values
                .as_mut_slice()
                .iter_mut()
                .zip(sparse.values.as_mut_slice())
                .zip(projected)
            {
                *r += p - *s;
                *s = p;
            }
        }
        let objective_after = residual.data_fit();

        if let Some(every) = config.check_every {
            if (k + 1) % every == 0 {
                residual.assert_consistent(problem, &low_rank, &sparse, k + 1);
            }
        }

        trace.push(IterationRecord {
            k,
            objective,
            dual_gap: (k % config.record_gap_every == 0).then_some(lmos.gap),
            step: Step::Fixed(gamma),
            rank: low_rank.rank(),
            nnz: sparse.nnz(),
            wall_nanos: clock.nanos(),
            u_l: None,
            u_s: None,
        });
        observer.observe(&IterationEvent {
            k,
            objective_before: objective,
            objective_half,
            objective_after,
            low_rank: &low_rank,
            sparse: &sparse,
            residual: &residual,
            t_l: None,
            t_s: None,
        });
        warm = Some(lmos.low_rank.triplet.v);
        k += 1;
    }

    Ok(Solution {
        low_rank,
        sparse,
        t_l: None,
        t_s: None,
        trace,
        status,
    })
}

//! Frank-Wolfe solvers for the penalized problem
//!
//! ```text
//! min f(L, S) = ½‖P_Ω[L + S − M]‖²_F + λ_L‖L‖_* + λ_S‖S‖_1
//! ```
//!
//! through its epigraph form
//!
//! ```text
//! min g(L, S, t_L, t_S) = ½‖P_Ω[L + S − M]‖²_F + λ_L t_L + λ_S t_S
//! s.t. ‖L‖_* ≤ t_L ≤ U_L,  ‖S‖_1 ≤ t_S ≤ U_S.
//! ```
//!
//! The linear subproblem over this set is homogeneous: for each block the
//! minimizer is either the origin or the scaled extreme point (U·D, U), see
//! [`fw_direction_penalized`].
//!
//! [`solve_fw_penalized`] is plain Frank-Wolfe with step 2/(k+2) and the
//! static bounds of [`initial_bounds`]. [`solve_fwt`] replaces the fixed step
//! with an exact line search over both blocks, adds a soft-thresholding step
//! on S, and shrinks the bounds to g/λ after every iteration; it stops once
//! `stall_window` consecutive relative decreases of g are at most `epsilon`.

use serde::{Deserialize, Serialize};

use crate::error::{CpcpError, Result};
use crate::model::{
    default_check_every, dot, CpcpProblem, IterationEvent, IterationRecord, LowRankIterate, ObservationMask,
    Observer, Residual, Silent, Solution, SolveStatus, SolverTrace, SparseIterate, Step, Stopwatch,
};
use crate::oracles::{lmo_l1, lmo_nuclear, shrink, OneSparseDirection, PowerOptions, RankOneDirection};

/// Objective values below this fraction of g(0) count as converged.
const ZERO_OBJECTIVE: f64 = 1e-14;
/// Allowed relative increase of g before [`update_bounds`] reports an error.
const DESCENT_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenalizedConfig {
    #[serde(rename = "lambda_L")]
    pub lambda_l: f64,
    #[serde(rename = "lambda_S")]
    pub lambda_s: f64,
    pub max_iter: usize,
    /// Relative decrease threshold of the stopping rule (FW-T only).
    pub epsilon: f64,
    /// Number of consecutive small decreases that stop FW-T.
    pub stall_window: usize,
    #[serde(skip)]
    pub power: PowerOptions,
    pub check_every: Option<usize>,
    pub dense_cache: Option<bool>,
}

impl Default for PenalizedConfig {
    fn default() -> Self {
        Self {
            lambda_l: 1.0,
            lambda_s: 1.0,
            max_iter: 1000,
            epsilon: 1e-3,
            stall_window: 5,
            power: PowerOptions::default(),
            check_every: default_check_every(),
            dense_cache: None,
        }
    }
}

impl PenalizedConfig {
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

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
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
        if !(self.epsilon > 0.0) {
            return Err(CpcpError::param("epsilon", format!("must be > 0, got {}", self.epsilon)));
        }
        if self.stall_window == 0 {
            return Err(CpcpError::param("stall_window", "must be >= 1"));
        }
        Ok(())
    }
}

/// Upper bounds on the epigraph variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    #[serde(rename = "U_L")]
    pub u_l: f64,
    #[serde(rename = "U_S")]
    pub u_s: f64,
}

/// U⁰ = g(0)/λ with g(0) = ½‖P_Ω M‖²_F.
pub fn initial_bounds(problem: &CpcpProblem) -> Result<BoundState> {
    let (lambda_l, lambda_s) = problem.weights()?;
    let g0 = 0.5 * problem.observed().norm_sq();
    Ok(BoundState {
        u_l: g0 / lambda_l,
        u_s: g0 / lambda_s,
    })
}

/// U = g/λ after a step whose objective moved from `previous` to `g_value`.
///
/// An increase above 1e-10 relative is an error: the FW-T step never
/// increases g.
pub fn update_bounds(g_value: f64, previous: f64, lambda_l: f64, lambda_s: f64) -> Result<BoundState> {
    if g_value > previous + DESCENT_SLACK * previous.abs() {
        return Err(CpcpError::ObjectiveIncreased {
            previous,
            current: g_value,
        });
    }
    Ok(BoundState {
        u_l: g_value / lambda_l,
        u_s: g_value / lambda_s,
    })
}

/// Stall test over the last values of g: true iff every consecutive
/// relative decrease (g_j − g_{j+1})/g_j in `recent` is at most `epsilon`.
/// Needs at least two values.
pub fn stopping_check(recent: &[f64], epsilon: f64) -> bool {
    recent.len() >= 2
        && recent.windows(2).all(|w| {
            let (prev, next) = (w[0], w[1]);
            prev <= 0.0 || (prev - next) / prev <= epsilon
        })
}

/// Frank-Wolfe vertex of the bounded epigraph set for gradient G.
#[derive(Debug, Clone)]
pub struct PenalizedDirection {
    /// `Some(−U_L·u vᵀ)` when the nuclear block moves to its extreme point.
    pub low_rank: Option<RankOneDirection>,
    pub v_tl: f64,
    pub sparse: Option<OneSparseDirection>,
    pub v_ts: f64,
    /// σ_max(G).
    pub sigma: f64,
    /// ‖G‖_∞.
    pub max_abs: f64,
    /// ⟨V_L + V_S, G⟩ + λ_L V_tL + λ_S V_tS.
    pub linear_value: f64,
    /// Right singular vector of G, reused as the next power-iteration start.
    pub right_vector: Vec<f64>,
}

/// Minimizes ⟨V_L + V_S, G⟩ + λ_L V_tL + λ_S V_tS over the bounded epigraph.
///
/// With D_L = −u vᵀ the unit-ball LMO output, the L block is (U_L·D_L, U_L)
/// when λ_L − σ_max(G) < 0 and (0, 0) otherwise; the S block is analogous
/// with ‖G‖_∞ and λ_S. Ties resolve to (0, 0).
#[allow(clippy::too_many_arguments)]
pub fn fw_direction_penalized(
    mask: &ObservationMask,
    grad: &[f64],
    lambda_l: f64,
    lambda_s: f64,
    bounds: BoundState,
    warm_start: Option<&[f64]>,
    power: &PowerOptions,
) -> Result<PenalizedDirection> {
    if !(bounds.u_l >= 0.0 && bounds.u_s >= 0.0) {
        return Err(CpcpError::param("bounds", format!("must be >= 0, got {bounds:?}")));
    }
    let view = crate::model::MaskedView::new(mask, grad)?;
    let nuc = lmo_nuclear(&view, 1.0, warm_start, power)?;
    let l1 = lmo_l1(grad, 1.0)?;
    let sigma = nuc.triplet.sigma;
    let max_abs = l1.max_abs;

    let mut linear_value = 0.0;
    let (low_rank, v_tl) = if lambda_l - sigma < 0.0 {
        linear_value += bounds.u_l * (lambda_l - sigma);
        let d = nuc.direction;
        (
            Some(RankOneDirection {
                coeff: -bounds.u_l,
                u: d.u,
                v: d.v,
            }),
            bounds.u_l,
        )
    } else {
        (None, 0.0)
    };
    let (sparse, v_ts) = if lambda_s - max_abs < 0.0 {
        linear_value += bounds.u_s * (lambda_s - max_abs);
        (
            Some(OneSparseDirection {
                position: l1.direction.position,
                value: bounds.u_s * l1.direction.value,
            }),
            bounds.u_s,
        )
    } else {
        (None, 0.0)
    };
    Ok(PenalizedDirection {
        low_rank,
        v_tl,
        sparse,
        v_ts,
        sigma,
        max_abs,
        linear_value,
        right_vector: nuc.triplet.v,
    })
}

/// Two-variable quadratic q(a, b) − q(0, 0)
/// = ga·a + gb·b + ½(paa·a² + 2·pab·a·b + pbb·b²) with a PSD Hessian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxQp {
    pub paa: f64,
    pub pab: f64,
    pub pbb: f64,
    pub ga: f64,
    pub gb: f64,
}

impl BoxQp {
    pub fn value(&self, a: f64, b: f64) -> f64 {
        self.ga * a + self.gb * b + 0.5 * (self.paa * a * a + 2.0 * self.pab * a * b + self.pbb * b * b)
    }

    /// Line-search model for moving (L, t_L) toward (V_L, V_tL) by `a` and
    /// (S, t_S) toward (V_S, V_tS) by `b`, using P = P_Ω[V_L − L] and
    /// Q = V_S − S. P_Ω L is read off the residual as R − S + M.
    #[allow(clippy::too_many_arguments)]
    pub fn from_iterate(
        problem: &CpcpProblem,
        residual: &Residual,
        sparse: &SparseIterate,
        t_l: f64,
        t_s: f64,
        dir: &PenalizedDirection,
        lambda_l: f64,
        lambda_s: f64,
    ) -> Self {
        let mut qp = BoxQp {
            paa: 0.0,
            pab: 0.0,
            pbb: 0.0,
            ga: lambda_l * (dir.v_tl - t_l),
            gb: lambda_s * (dir.v_ts - t_s),
        };
        let (mut ra, mut rb) = (0.0, 0.0);
        for_each_direction_entry(problem, residual, sparse, dir, |p, q, r| {
            qp.paa += p * p;
            qp.pab += p * q;
            qp.pbb += q * q;
            ra += r * p;
            rb += r * q;
        });
        qp.ga += ra;
        qp.gb += rb;
        qp
    }
}

/// Calls `f(P_p, Q_p, R_p)` for every mask position p in order.
fn for_each_direction_entry(
    problem: &CpcpProblem,
    residual: &Residual,
    sparse: &SparseIterate,
    dir: &PenalizedDirection,
    mut f: impl FnMut(f64, f64, f64),
) {
    let mask = problem.mask();
    let (rows, cols) = (mask.row_indices(), mask.col_indices());
    let r = residual.values.as_slice();
    let s = sparse.values.as_slice();
    let m = problem.observed().as_slice();
    let vs = dir.sparse.map_or((usize::MAX, 0.0), |d| (d.position, d.value));
    for p in 0..r.len() {
        let l = r[p] - s[p] + m[p];
        let vl = dir
            .low_rank
            .as_ref()
            .map_or(0.0, |d| d.coeff * d.u[rows[p] as usize] * d.v[cols[p] as usize]);
        let v_s = if p == vs.0 { vs.1 } else { 0.0 };
        f(vl - l, v_s - s[p], r[p]);
    }
}

/// Exact minimizer of a [`BoxQp`] over [0, 1]².
///
/// Tries the interior stationary point, then the minimizers along the four
/// edges, then the four corners, and keeps the lowest value (earliest
/// candidate on ties). A singular Hessian skips the interior candidate.
pub fn exact_line_search(qp: &BoxQp) -> (f64, f64) {
    let mut best = (0.0, 0.0);
    let mut best_val = qp.value(0.0, 0.0);
    let mut consider = |a: f64, b: f64| {
        let v = qp.value(a, b);
        if v < best_val {
            best = (a, b);
            best_val = v;
        }
    };

    let det = qp.paa * qp.pbb - qp.pab * qp.pab;
    if det > 1e-14 * qp.paa * qp.pbb && det > 0.0 {
        let a = (-qp.ga * qp.pbb + qp.gb * qp.pab) / det;
        let b = (-qp.gb * qp.paa + qp.ga * qp.pab) / det;
        if (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) {
            consider(a, b);
        }
    }
    // minimizer over [0, 1] of ½c·x² + l·x
    let edge = |c: f64, l: f64| -> f64 {
        if c > 0.0 {
            (-l / c).clamp(0.0, 1.0)
        } else if l < 0.0 {
            1.0
        } else {
            0.0
        }
    };
    consider(0.0, edge(qp.pbb, qp.gb));
    consider(1.0, edge(qp.pbb, qp.gb + qp.pab));
    consider(edge(qp.paa, qp.ga), 0.0);
    consider(edge(qp.paa, qp.ga + qp.pab), 1.0);
    for (a, b) in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
        consider(a, b);
    }
    best
}

/// S ← T_{λ_S}[S − R] on Ω, keeping R = P_Ω[L + S − M] in sync.
/// Returns the new ‖S‖_1.
pub fn prox_step_sparse(sparse: &mut SparseIterate, residual: &mut Residual, lambda_s: f64) -> f64 {
    let mut l1 = 0.0;
    for (s, r) in sparse
        .values
        .as_mut_slice()
        .iter_mut()
        .zip(residual.values.as_mut_slice())
    {
        let next = shrink(*s - *r, lambda_s);
        *r += next - *s;
        *s = next;
        l1 += next.abs();
    }
    l1
}

/// g = ½‖R‖² + λ_L t_L + λ_S t_S.
fn epigraph_value(residual: &Residual, t_l: f64, t_s: f64, lambda_l: f64, lambda_s: f64) -> f64 {
    residual.data_fit() + lambda_l * t_l + lambda_s * t_s
}

/// Plain Frank-Wolfe on the bounded epigraph with the static bounds U⁰.
pub fn solve_fw_penalized(problem: &CpcpProblem, config: &PenalizedConfig) -> Result<Solution> {
    solve_fw_penalized_observed(problem, config, &mut Silent)
}

pub fn solve_fw_penalized_observed(
    problem: &CpcpProblem,
    config: &PenalizedConfig,
    observer: &mut dyn Observer,
) -> Result<Solution> {
    run(problem, config, false, observer)
}

/// FW-T: line-searched Frank-Wolfe step, soft-thresholding on S, and
/// shrinking bounds.
pub fn solve_fwt(problem: &CpcpProblem, config: &PenalizedConfig) -> Result<Solution> {
    solve_fwt_observed(problem, config, &mut Silent)
}

pub fn solve_fwt_observed(
    problem: &CpcpProblem,
    config: &PenalizedConfig,
    observer: &mut dyn Observer,
) -> Result<Solution> {
    run(problem, config, true, observer)
}

fn run(problem: &CpcpProblem, config: &PenalizedConfig, thresholding: bool, observer: &mut dyn Observer) -> Result<Solution> {
    config.validate(problem)?;
    let (lambda_l, lambda_s) = (config.lambda_l, config.lambda_s);
    let mask = problem.mask();
    let (m, n) = problem.shape();
    let clock = Stopwatch::start();

    let mut low_rank = match config.dense_cache {
        Some(c) => LowRankIterate::zeros_with_cache(m, n, c),
        None => LowRankIterate::zeros(m, n),
    };
    let mut sparse = SparseIterate::zeros(mask);
    let mut residual = Residual::initial(problem);
    let (mut t_l, mut t_s) = (0.0, 0.0);
    let mut bounds = initial_bounds(problem)?;
    let g0 = residual.data_fit();
    let mut trace = SolverTrace::new();

    if g0 == 0.0 {
        // x⁰ = 0 is optimal
        trace.push(IterationRecord {
            k: 0,
            objective: 0.0,
            dual_gap: Some(0.0),
            step: Step::None,
            rank: 0,
            nnz: 0,
            wall_nanos: clock.nanos(),
            u_l: Some(bounds.u_l),
            u_s: Some(bounds.u_s),
        });
        return Ok(Solution {
            low_rank,
            sparse,
            t_l: Some(0.0),
            t_s: Some(0.0),
            trace,
            status: SolveStatus::Converged,
        });
    }

    let mut history = vec![g0];
    let mut warm: Option<Vec<f64>> = None;
    let mut stop = false;
    let mut k = 0;
    loop {
        let g = *history.last().expect("history starts with g0");
        let dir = fw_direction_penalized(
            mask,
            residual.values.as_slice(),
            lambda_l,
            lambda_s,
            bounds,
            warm.as_deref(),
            &config.power,
        )?;
        let r = residual.values.as_slice();
        let x_dot_g = dot(r, r) + dot(problem.observed().as_slice(), r) + lambda_l * t_l + lambda_s * t_s;
        let gap = x_dot_g - dir.linear_value;

        if stop || k == config.max_iter {
            trace.push(IterationRecord {
                k,
                objective: g,
                dual_gap: Some(gap),
                step: Step::None,
                rank: low_rank.rank(),
                nnz: sparse.nnz(),
                wall_nanos: clock.nanos(),
                u_l: Some(bounds.u_l),
                u_s: Some(bounds.u_s),
            });
            break;
        }

        let (a, b, step) = if thresholding {
            let qp = BoxQp::from_iterate(problem, &residual, &sparse, t_l, t_s, &dir, lambda_l, lambda_s);
            let (a, b) = exact_line_search(&qp);
            (a, b, Step::Pair(a, b))
        } else {
            let gamma = crate::fw::fw_step_size(k);
            (gamma, gamma, Step::Fixed(gamma))
        };

        // R ← R + aP + bQ, then L, S, t follow the same convex combinations
        {
            let mut delta = Vec::with_capacity(residual.values.len());
            for_each_direction_entry(problem, &residual, &sparse, &dir, |p, q, _| delta.push(a * p + b * q));
            for (r, d) in residual.values.as_mut_slice().iter_mut().zip(delta) {
                *r += d;
            }
        }
        match &dir.low_rank {
            Some(d) => low_rank.convex_step(a, d.coeff, &d.u, &d.v),
            None => low_rank.scale(1.0 - a),
        }
        match dir.sparse {
            Some(d) => sparse.convex_step(b, d.position, d.value),
            None => sparse.values.scale(1.0 - b),
        }
        t_l += a * (dir.v_tl - t_l);
        t_s += b * (dir.v_ts - t_s);
        low_rank.maybe_compress();
        let g_half = epigraph_value(&residual, t_l, t_s, lambda_l, lambda_s);

        let g_next = if thresholding {
            t_s = prox_step_sparse(&mut sparse, &mut residual, lambda_s);
            epigraph_value(&residual, t_l, t_s, lambda_l, lambda_s)
        } else {
            g_half
        };

        if let Some(every) = config.check_every {
            if (k + 1) % every == 0 {
                residual.assert_consistent(problem, &low_rank, &sparse, k + 1);
            }
        }

        trace.push(IterationRecord {
            k,
            objective: g,
            dual_gap: Some(gap),
            step,
            rank: low_rank.rank(),
            nnz: sparse.nnz(),
            wall_nanos: clock.nanos(),
            u_l: Some(bounds.u_l),
            u_s: Some(bounds.u_s),
        });
        if thresholding {
            bounds = update_bounds(g_next, g, lambda_l, lambda_s)?;
        }
        observer.observe(&IterationEvent {
            k,
            objective_before: g,
            objective_half: g_half,
            objective_after: g_next,
            low_rank: &low_rank,
            sparse: &sparse,
            residual: &residual,
            t_l: Some(t_l),
            t_s: Some(t_s),
        });

        history.push(g_next);
        if thresholding {
            let w = config.stall_window;
            stop = g_next < ZERO_OBJECTIVE * g0
                || (history.len() > w && stopping_check(&history[history.len() - w - 1..], config.epsilon));
        }
        warm = Some(dir.right_vector);
        k += 1;
    }

    Ok(Solution {
        low_rank,
        sparse,
        t_l: Some(t_l),
        t_s: Some(t_s),
        trace,
        status: if stop {
            SolveStatus::Converged
        } else {
            SolveStatus::MaxIterations
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{eval_epigraph, eval_penalized, EpigraphIterate, MaskedValues};
    use crate::rng::Stream;

    fn problem(m: usize, n: usize, rho: f64, seed: u64, lambda_l: f64, lambda_s: f64) -> CpcpProblem {
        let mut rng = Stream::new(seed);
        let entries: Vec<(usize, usize)> = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|_| rng.uniform() < rho)
            .collect();
        let mask = ObservationMask::new(m, n, entries).unwrap();
        let mut rng = Stream::new(seed ^ 0xabc);
        let observed = MaskedValues(
            (0..mask.len())
                .map(|_| rng.normal() + if rng.uniform() < 0.1 { 10.0 * rng.normal() } else { 0.0 })
                .collect(),
        );
        CpcpProblem::penalized(mask, observed, lambda_l, lambda_s).unwrap()
    }

    #[test]
    fn initial_bounds_arithmetic() {
        let mask = ObservationMask::full(1, 2).unwrap();
        let p = CpcpProblem::penalized(mask, MaskedValues(vec![2.0, 2.0]), 2.0, 4.0).unwrap();
        let b = initial_bounds(&p).unwrap();
        assert_eq!(b, BoundState { u_l: 2.0, u_s: 1.0 });
        let p = problem(5, 6, 0.8, 1, 0.7, 0.3);
        let b = initial_bounds(&p).unwrap();
        let g0 = eval_epigraph(&p, &EpigraphIterate::zeros(p.mask())).unwrap();
        assert!((b.u_l * 0.7 - g0).abs() < 1e-12 * g0);
        assert!((b.u_s * 0.3 - g0).abs() < 1e-12 * g0);
    }

    #[test]
    fn direction_dichotomy() {
        let mask = ObservationMask::full(2, 2).unwrap();
        let grad = [3.0, 0.0, 0.0, -1.0];
        let bounds = BoundState { u_l: 5.0, u_s: 7.0 };
        let opts = PowerOptions::default();
        // λ_L > σ_max = 3, λ_S < ‖G‖_∞
        let d = fw_direction_penalized(&mask, &grad, 3.5, 1.0, bounds, None, &opts).unwrap();
        assert!(d.low_rank.is_none());
        assert_eq!(d.v_tl, 0.0);
        assert_eq!(d.sparse, Some(OneSparseDirection { position: 0, value: -7.0 }));
        assert_eq!(d.v_ts, 7.0);
        assert!((d.linear_value - 7.0 * (1.0 - 3.0)).abs() < 1e-12);
        // active nuclear block
        let d = fw_direction_penalized(&mask, &grad, 1.0, 4.0, bounds, None, &opts).unwrap();
        let l = d.low_rank.unwrap();
        assert_eq!(l.coeff, -5.0);
        assert!((l.coeff * l.u[0] * l.v[0] + 5.0).abs() < 1e-8);
        assert_eq!(d.v_tl, 5.0);
        assert!(d.sparse.is_none());
        // zero gradient: both blocks stay at the origin
        let d = fw_direction_penalized(&mask, &[0.0; 4], 1.0, 1.0, bounds, None, &opts).unwrap();
        assert!(d.low_rank.is_none() && d.sparse.is_none());
        assert_eq!(d.linear_value, 0.0);
        // boundary λ_S = ‖G‖_∞ resolves to the origin
        let d = fw_direction_penalized(&mask, &grad, 1.0, 3.0, bounds, None, &opts).unwrap();
        assert!(d.sparse.is_none());
    }

    #[test]
    fn direction_minimizes_over_the_bounded_epigraph() {
        // compare with the four candidate vertex pairs on random instances
        let mut rng = Stream::new(3);
        let mask = ObservationMask::full(4, 3).unwrap();
        for _ in 0..50 {
            let grad: Vec<f64> = (0..12).map(|_| rng.normal()).collect();
            let (ll, ls) = (2.0 * rng.uniform(), 2.0 * rng.uniform());
            let bounds = BoundState { u_l: 3.0, u_s: 2.0 };
            let d = fw_direction_penalized(&mask, &grad, ll, ls, bounds, None, &PowerOptions::default()).unwrap();
            let best_l = (bounds.u_l * (ll - d.sigma)).min(0.0);
            let best_s = (bounds.u_s * (ls - d.max_abs)).min(0.0);
            assert!((d.linear_value - (best_l + best_s)).abs() < 1e-9);
        }
    }

    #[test]
    fn line_search_degenerate_directions() {
        let qp = BoxQp {
            paa: 0.0,
            pab: 0.0,
            pbb: 0.0,
            ga: 1.0,
            gb: 2.0,
        };
        assert_eq!(exact_line_search(&qp), (0.0, 0.0));
        let flat = BoxQp { ga: 0.0, gb: 0.0, ..qp };
        assert_eq!(exact_line_search(&flat), (0.0, 0.0));
        let down = BoxQp { ga: -1.0, gb: -1.0, ..qp };
        assert_eq!(exact_line_search(&down), (1.0, 1.0));
    }

    #[test]
    fn line_search_interior_matches_stationarity() {
        let qp = BoxQp {
            paa: 4.0,
            pab: 1.0,
            pbb: 3.0,
            ga: -2.0,
            gb: -1.5,
        };
        let (a, b) = exact_line_search(&qp);
        // [[4,1],[1,3]]·(a,b) = (2, 1.5)
        let det = 4.0 * 3.0 - 1.0;
        let (ea, eb) = ((2.0 * 3.0 - 1.5) / det, (4.0 * 1.5 - 2.0) / det);
        assert!((a - ea).abs() < 1e-14 && (b - eb).abs() < 1e-14);
    }

    fn random_qp(rng: &mut Stream) -> BoxQp {
        // Gram matrix of two random vectors, sometimes parallel or zero
        let p: Vec<f64> = (0..5).map(|_| rng.normal()).collect();
        let mut q: Vec<f64> = (0..5).map(|_| rng.normal()).collect();
        let case = rng.uniform();
        if case < 0.15 {
            q = p.iter().map(|x| -0.5 * x).collect();
        } else if case < 0.25 {
            q = vec![0.0; 5];
        }
        BoxQp {
            paa: dot(&p, &p),
            pab: dot(&p, &q),
            pbb: dot(&q, &q),
            ga: 3.0 * rng.normal(),
            gb: 3.0 * rng.normal(),
        }
    }

    #[test]
    fn line_search_beats_grid_and_fixed_step() {
        let mut rng = Stream::new(4);
        for trial in 0..200 {
            let qp = random_qp(&mut rng);
            let (a, b) = exact_line_search(&qp);
            assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
            let v = qp.value(a, b);
            let grid = (0..=100)
                .flat_map(|i| (0..=100).map(move |j| (i as f64 / 100.0, j as f64 / 100.0)))
                .map(|(x, y)| qp.value(x, y))
                .fold(f64::INFINITY, f64::min);
            assert!(v <= grid + 1e-9, "trial {trial}: {v} vs {grid}");
            let gamma = crate::fw::fw_step_size(trial % 20);
            assert!(v <= qp.value(gamma, gamma) + 1e-12);
        }
    }

    #[test]
    fn prox_step_examples() {
        let mask = ObservationMask::full(1, 3).unwrap();
        let observed = MaskedValues(vec![0.0; 3]);
        let p = CpcpProblem::penalized(mask.clone(), observed, 1.0, 0.5).unwrap();
        let mut s = SparseIterate {
            values: MaskedValues(vec![2.0, -3.0, 1.0]),
        };
        // R consistent with L = 0: R = S − M = S
        let mut r = Residual::from_scratch(&p, &LowRankIterate::zeros(1, 3), &s);
        let t = prox_step_sparse(&mut s, &mut r, 0.5);
        // S − R = 0 here, so everything is thresholded away
        assert_eq!(s.values.as_slice(), &[0.0, 0.0, 0.0]);
        assert_eq!(t, 0.0);

        // R = 0: S shrinks by λ_S toward 0
        let mut s = SparseIterate {
            values: MaskedValues(vec![2.0, -3.0, 1.0]),
        };
        let mut r = Residual {
            values: MaskedValues::zeros(3),
        };
        let t = prox_step_sparse(&mut s, &mut r, 0.5);
        assert_eq!(s.values.as_slice(), &[1.5, -2.5, 0.5]);
        assert_eq!(t, 4.5);
        assert_eq!(r.values.as_slice(), &[-0.5, 0.5, -0.5]);
    }

    #[test]
    fn bounds_updates() {
        let b = update_bounds(5.0, 10.0, 2.0, 0.5).unwrap();
        assert_eq!(b, BoundState { u_l: 2.5, u_s: 10.0 });
        let same = update_bounds(10.0, 10.0, 2.0, 0.5).unwrap();
        assert_eq!(same, BoundState { u_l: 5.0, u_s: 20.0 });
        assert!(matches!(
            update_bounds(10.1, 10.0, 1.0, 1.0),
            Err(CpcpError::ObjectiveIncreased { .. })
        ));
    }

    #[test]
    fn stall_rule() {
        let slow: Vec<f64> = (0..6).map(|i| 1.0 * (1.0 - 1e-4f64).powi(i)).collect();
        assert!(stopping_check(&slow, 1e-3));
        let mut jump = slow.clone();
        jump[3] = 0.5 * jump[2];
        jump[4] = jump[3];
        jump[5] = jump[3];
        assert!(!stopping_check(&jump, 1e-3));
        assert!(stopping_check(&[2.0; 6], 1e-3));
        assert!(!stopping_check(&[2.0], 1e-3));
    }

    #[test]
    fn zero_data_returns_immediately() {
        let mask = ObservationMask::full(3, 3).unwrap();
        let p = CpcpProblem::penalized(mask, MaskedValues::zeros(9), 1.0, 1.0).unwrap();
        let sol = solve_fwt(&p, &PenalizedConfig::new(1.0, 1.0)).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        assert_eq!(sol.low_rank.rank(), 0);
        assert_eq!(sol.sparse.nnz(), 0);
        assert_eq!(sol.trace.len(), 1);
    }

    #[test]
    fn large_weights_make_zero_a_fixed_point() {
        let p0 = problem(6, 5, 0.9, 5, 1.0, 1.0);
        let sigma = crate::oracles::leading_singular_pair(&p0.observed().view(p0.mask()), &PowerOptions::default()).sigma;
        let (ll, ls) = (1.01 * sigma, 1.01 * p0.observed().max_abs());
        let p = p0
            .with_formulation(crate::model::Formulation::Penalized {
                lambda_l: ll,
                lambda_s: ls,
            })
            .unwrap();
        for solver in [solve_fwt, solve_fw_penalized] {
            let sol = solver(&p, &PenalizedConfig::new(ll, ls).with_max_iter(20)).unwrap();
            assert_eq!(sol.low_rank.nuclear_norm(), 0.0);
            assert_eq!(sol.sparse.nnz(), 0);
        }
        // 0 is optimal: σ_max(M) ≤ λ_L and ‖M‖_∞ ≤ λ_S put −M in the subdifferential
        let mask = p.mask().clone();
        let f0 = eval_penalized(&p, &LowRankIterate::zeros(6, 5), &SparseIterate::zeros(&mask)).unwrap();
        let fwt = solve_fwt(&p, &PenalizedConfig::new(ll, ls)).unwrap();
        assert!(eval_penalized(&p, &fwt.low_rank, &fwt.sparse).unwrap() >= f0 - 1e-12);
    }

    #[test]
    fn fwt_descends_and_bounds_shrink() {
        let p = problem(20, 15, 0.7, 6, 0.8, 0.15);
        let cfg = PenalizedConfig::new(0.8, 0.15).with_max_iter(300).with_epsilon(1e-12);
        let g0 = 0.5 * p.observed().norm_sq();
        let mut check = |e: &IterationEvent<'_>| {
            assert!(e.objective_half <= e.objective_before + 1e-10 * g0);
            assert!(e.objective_after <= e.objective_half + 1e-10 * g0);
            let t_l = e.t_l.unwrap();
            assert!(e.low_rank.nuclear_norm() <= t_l + 1e-8 * t_l.max(1.0));
            assert!((e.sparse.l1() - e.t_s.unwrap()).abs() <= 1e-12 * e.t_s.unwrap().max(1.0));
        };
        let sol = solve_fwt_observed(&p, &cfg, &mut check).unwrap();
        let recs = sol.trace.records();
        for w in recs.windows(2) {
            assert!(w[1].u_l.unwrap() <= w[0].u_l.unwrap());
            assert!(w[1].u_s.unwrap() <= w[0].u_s.unwrap());
            assert!((w[1].u_l.unwrap() * 0.8 - w[1].objective).abs() <= 1e-12 * w[1].objective);
        }
        // trace objective is g at the returned iterate
        let x = EpigraphIterate {
            low_rank: sol.low_rank.clone(),
            sparse: sol.sparse.clone(),
            t_l: sol.t_l.unwrap(),
            t_s: sol.t_s.unwrap(),
        };
        let g = eval_epigraph(&p, &x).unwrap();
        assert!((g - sol.trace.last().unwrap().objective).abs() < 1e-10 * g);
    }

    #[test]
    fn fwt_gap_bound_and_bound_validity() {
        let (ll, ls) = (0.8, 0.15);
        let p = problem(20, 15, 0.7, 7, ll, ls);
        let u0 = initial_bounds(&p).unwrap();
        let sol = solve_fwt(&p, &PenalizedConfig::new(ll, ls).with_max_iter(200).with_epsilon(1e-12)).unwrap();
        let c = u0.u_l * u0.u_l + u0.u_s * u0.u_s;
        for kk in 1..sol.trace.len() {
            let best = sol.trace.records()[1..=kk]
                .iter()
                .map(|r| r.dual_gap.unwrap())
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 48.0 * c / (kk as f64 + 2.0));
        }
        let nuc = sol.low_rank.nuclear_norm();
        let l1 = sol.sparse.l1();
        for r in sol.trace.records() {
            assert!(r.u_l.unwrap() >= nuc * (1.0 - 1e-9));
            assert!(r.u_s.unwrap() >= l1 * (1.0 - 1e-9));
        }
    }

    #[test]
    fn algorithm5_keeps_static_bounds_and_feasibility() {
        let (ll, ls) = (0.5, 0.1);
        let p = problem(10, 12, 0.8, 8, ll, ls);
        let u0 = initial_bounds(&p).unwrap();
        let mut check = |e: &IterationEvent<'_>| {
            let t_l = e.t_l.unwrap();
            assert!(t_l <= u0.u_l * (1.0 + 1e-12));
            assert!(e.low_rank.nuclear_norm() <= t_l + 1e-8 * t_l.max(1.0));
            assert!(e.sparse.l1() <= e.t_s.unwrap() * (1.0 + 1e-12) + 1e-12);
        };
        let sol = solve_fw_penalized_observed(&p, &PenalizedConfig::new(ll, ls).with_max_iter(100), &mut check).unwrap();
        assert_eq!(sol.status, SolveStatus::MaxIterations);
        assert_eq!(sol.iterations(), 100);
        assert!(sol.trace.records().iter().all(|r| r.u_l == Some(u0.u_l)));
    }

    #[test]
    fn stall_rule_is_visible_in_the_trace() {
        let p = problem(15, 15, 1.0, 9, 0.8, 0.15);
        let sol = solve_fwt(&p, &PenalizedConfig::new(0.8, 0.15).with_max_iter(5000)).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        let g = sol.trace.objectives();
        let k = g.len() - 1;
        assert!(k >= 5);
        assert!(stopping_check(&g[k - 5..], 1e-3));
        for end in 5..k {
            assert!(!stopping_check(&g[end - 5..=end], 1e-3));
        }
    }
}

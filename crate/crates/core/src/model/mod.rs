//! Problem data, iterate representations, objectives and traces shared by
//! every solver.

mod iterate;
mod low_rank;
mod mask;
mod masked;
pub mod objective;
mod problem;
mod residual;
mod trace;

pub use iterate::{EpigraphIterate, SparseIterate};
pub use low_rank::{LowRankIterate, DENSE_CACHE_LIMIT};
pub use mask::ObservationMask;
pub use masked::{dot, project_onto_mask, KahanSum, MaskedValues, MaskedView};
pub use objective::{data_fit, eval_constrained, eval_epigraph, eval_penalized};
pub use problem::{CpcpProblem, Formulation};
pub use residual::Residual;
pub(crate) use trace::TraceRow;
pub use trace::{IterationRecord, SolverTrace, Step};

use std::time::Instant;

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// A stopping rule (gap tolerance, stall window, objective target) fired.
    Converged,
    /// Ran out of iterations first.
    MaxIterations,
}

/// Output of any solver.
#[derive(Debug, Clone)]
pub struct Solution {
    pub low_rank: LowRankIterate,
    pub sparse: SparseIterate,
    /// Epigraph variables, for the penalized Frank-Wolfe solvers.
    pub t_l: Option<f64>,
    pub t_s: Option<f64>,
    pub trace: SolverTrace,
    pub status: SolveStatus,
}

impl Solution {
    pub fn iterations(&self) -> usize {
        self.trace.last().map_or(0, |r| r.k)
    }
}

/// Snapshot handed to an [`Observer`] after each completed iteration.
#[derive(Debug)]
pub struct IterationEvent<'a> {
    /// Index of the iterate the step started from.
    pub k: usize,
    pub objective_before: f64,
    /// Objective after the Frank-Wolfe (or gradient) half-step.
    pub objective_half: f64,
    /// Objective of the new iterate x^{k+1}.
    pub objective_after: f64,
    pub low_rank: &'a LowRankIterate,
    pub sparse: &'a SparseIterate,
    pub residual: &'a Residual,
    pub t_l: Option<f64>,
    pub t_s: Option<f64>,
}

/// Per-iteration callback; the default does nothing.
pub trait Observer {
    fn observe(&mut self, _event: &IterationEvent<'_>) {}
}

/// An observer that ignores every event.
#[derive(Debug, Default, Clone, Copy)]
pub struct Silent;

impl Observer for Silent {}

impl<F: FnMut(&IterationEvent<'_>)> Observer for F {
    fn observe(&mut self, event: &IterationEvent<'_>) {
        self(event)
    }
}

/// Clock used to stamp trace records.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stopwatch(Instant);

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch(Instant::now())
    }

    pub fn nanos(&self) -> u64 {
        self.0.elapsed().as_nanos() as u64
    }
}

/// Residual drift check cadence: every iteration in debug builds, every
/// 100 in release builds.
pub fn default_check_every() -> Option<usize> {
    if cfg!(debug_assertions) {
        Some(1)
    } else {
        Some(100)
    }
}

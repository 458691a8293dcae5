use serde::{Deserialize, Serialize};

/// Step taken from an iterate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Step {
    /// No step (final record, or an early stop).
    #[default]
    None,
    /// Single step length γ.
    Fixed(f64),
    /// Separate lengths (a, b) for the low-rank and sparse blocks.
    Pair(f64, f64),
}

impl Step {
    pub fn parts(self) -> (Option<f64>, Option<f64>) {
        match self {
            Step::None => (None, None),
            Step::Fixed(a) => (Some(a), None),
            Step::Pair(a, b) => (Some(a), Some(b)),
        }
    }

    pub fn from_parts(a: Option<f64>, b: Option<f64>) -> Self {
        match (a, b) {
            (Some(a), Some(b)) => Step::Pair(a, b),
            (Some(a), None) => Step::Fixed(a),
            _ => Step::None,
        }
    }
}

/// One row of a solver trace, describing iterate `k` and the step taken from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub objective: f64,
    pub dual_gap: Option<f64>,
    pub step: Step,
    pub rank: usize,
    pub nnz: usize,
    /// Elapsed time since the solve started.
    pub wall_nanos: u64,
    pub u_l: Option<f64>,
    pub u_s: Option<f64>,
}

/// Flat form used for CSV / JSON-lines.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub(crate) struct TraceRow {
    pub k: usize,
    pub objective: f64,
    pub dual_gap: Option<f64>,
    pub step_a: Option<f64>,
    pub step_b: Option<f64>,
    pub rank: usize,
    pub nnz: usize,
    pub wall_nanos: u64,
    #[serde(rename = "U_L")]
    pub u_l: Option<f64>,
    #[serde(rename = "U_S")]
    pub u_s: Option<f64>,
}

impl From<&IterationRecord> for TraceRow {
    fn from(r: &IterationRecord) -> Self {
        let (step_a, step_b) = r.step.parts();
        TraceRow {
            k: r.k,
            objective: r.objective,
            dual_gap: r.dual_gap,
            step_a,
            step_b,
            rank: r.rank,
            nnz: r.nnz,
            wall_nanos: r.wall_nanos,
            u_l: r.u_l,
            u_s: r.u_s,
        }
    }
}

impl From<TraceRow> for IterationRecord {
    fn from(r: TraceRow) -> Self {
        IterationRecord {
            k: r.k,
            objective: r.objective,
            dual_gap: r.dual_gap,
            step: Step::from_parts(r.step_a, r.step_b),
            rank: r.rank,
            nnz: r.nnz,
            wall_nanos: r.wall_nanos,
            u_l: r.u_l,
            u_s: r.u_s,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    records: Vec<IterationRecord>,
}

impl SolverTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record; `k` must exceed the previous one (and start at 0).
    pub fn push(&mut self, record: IterationRecord) {
        match self.records.last() {
            None => assert_eq!(record.k, 0, "trace must start at k = 0"),
            Some(prev) => assert!(record.k > prev.k, "trace indices must increase"),
        }
        self.records.push(record);
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    /// Smallest recorded duality gap over records with `k ≥ from`.
    pub fn min_gap_from(&self, from: usize) -> Option<f64> {
        self.records
            .iter()
            .filter(|r| r.k >= from)
            .filter_map(|r| r.dual_gap)
            .reduce(f64::min)
    }

    /// Per-iteration wall times: differences of consecutive records.
    pub fn iteration_nanos(&self) -> Vec<u64> {
        self.records
            .windows(2)
            .map(|w| w[1].wall_nanos.saturating_sub(w[0].wall_nanos))
            .collect()
    }
}

impl FromIterator<IterationRecord> for SolverTrace {
    fn from_iter<I: IntoIterator<Item = IterationRecord>>(iter: I) -> Self {
        let mut t = SolverTrace::new();
        for r in iter {
            t.push(r);
        }
        t
    }
}

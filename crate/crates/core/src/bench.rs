//! Per-iteration wall-time benchmark over a sweep of problem sizes.
//!
//! Each size gets a fresh synthetic instance (rank 5, 1% gross errors,
//! noise 0.1, sampling ratio ρ). Constrained solvers use the true norms as
//! radii; penalized ones use [`default_weights`] with δ = 0.01. Iteration 0
//! is excluded from the timings and the median is taken over all remaining
//! iterations of all repetitions.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{solve_fista, solve_ista, IstaConfig};
use crate::error::{CpcpError, Result};
use crate::fw::{solve_fw_constrained, solve_fwp, ConstrainedConfig};
use crate::fwt::{solve_fw_penalized, solve_fwt, PenalizedConfig};
use crate::model::{CpcpProblem, Solution};
use crate::synth::{default_weights, gen_synthetic, SyntheticSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Fw,
    Fwp,
    FwPen,
    Fwt,
    Ista,
    Fista,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Fw,
        Algorithm::Fwp,
        Algorithm::FwPen,
        Algorithm::Fwt,
        Algorithm::Ista,
        Algorithm::Fista,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Fw => "fw",
            Algorithm::Fwp => "fwp",
            Algorithm::FwPen => "fw-pen",
            Algorithm::Fwt => "fwt",
            Algorithm::Ista => "ista",
            Algorithm::Fista => "fista",
        }
    }

    /// Whether the solver works on the norm-constrained form.
    pub fn is_constrained(self) -> bool {
        matches!(self, Algorithm::Fw | Algorithm::Fwp)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = CpcpError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| CpcpError::param("algo", format!("unknown solver `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    /// Timed iterations per run (iteration 0 comes on top).
    pub iterations: usize,
    pub repetitions: usize,
    pub rho: f64,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            iterations: 10,
            repetitions: 3,
            rho: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub solver: String,
    pub m: usize,
    pub n: usize,
    pub rho: f64,
    pub median_iter_nanos: u64,
}

/// Runs `algo` for `iterations + 1` iterations without early stopping.
pub fn run_fixed_iterations(algo: Algorithm, problem_data: &BenchInstance, iterations: usize) -> Result<Solution> {
    let max_iter = iterations + 1;
    let (mask, observed) = (problem_data.mask.clone(), problem_data.observed.clone());
    if algo.is_constrained() {
        let (tau_l, tau_s) = problem_data.radii;
        let problem = CpcpProblem::constrained(mask, observed, tau_l, tau_s)?;
        let config = ConstrainedConfig {
            max_iter,
            record_gap_every: usize::MAX,
            check_every: None,
            dense_cache: Some(false),
            ..ConstrainedConfig::new(tau_l, tau_s)
        };
        return match algo {
            Algorithm::Fw => solve_fw_constrained(&problem, &config),
            _ => solve_fwp(&problem, &config),
        };
    }
    let (lambda_l, lambda_s) = problem_data.weights;
    let problem = CpcpProblem::penalized(mask, observed, lambda_l, lambda_s)?;
    match algo {
        Algorithm::Ista | Algorithm::Fista => {
            let config = IstaConfig::new(lambda_l, lambda_s).with_max_iter(max_iter);
            if algo == Algorithm::Ista {
                solve_ista(&problem, &config)
            } else {
                solve_fista(&problem, &config)
            }
        }
        _ => {
            let config = PenalizedConfig {
                max_iter,
                epsilon: f64::MIN_POSITIVE,
                check_every: None,
                dense_cache: Some(false),
                ..PenalizedConfig::new(lambda_l, lambda_s)
            };
            if algo == Algorithm::Fwt {
                solve_fwt(&problem, &config)
            } else {
                solve_fw_penalized(&problem, &config)
            }
        }
    }
}

/// Observed data plus the radii and weights the benchmark uses for it.
#[derive(Debug, Clone)]
pub struct BenchInstance {
    pub mask: crate::model::ObservationMask,
    pub observed: crate::model::MaskedValues,
    pub radii: (f64, f64),
    pub weights: (f64, f64),
}

impl BenchInstance {
    pub fn generate(m: usize, n: usize, rho: f64, seed: u64) -> Result<Self> {
        let spec = SyntheticSpec::low_noise(m, n, seed).with_rho(rho);
        let truth = gen_synthetic(&spec)?;
        let weights = default_weights(&truth.mask, &truth.observed, 0.01)?;
        Ok(Self {
            mask: truth.mask,
            observed: truth.observed,
            radii: (truth.tau_l_true, truth.tau_s_true.max(f64::MIN_POSITIVE)),
            weights,
        })
    }
}

/// Median per-iteration time of `algo` at each size of `sizes`.
pub fn bench_per_iteration(algo: Algorithm, sizes: &[(usize, usize)], opts: &BenchOptions) -> Result<Vec<BenchRow>> {
    if opts.iterations == 0 || opts.repetitions == 0 {
        return Err(CpcpError::param("iterations/repetitions", "must be >= 1"));
    }
    if sizes.windows(2).any(|w| w[1].0 * w[1].1 < w[0].0 * w[0].1) {
        return Err(CpcpError::param("sizes", "sweep must be ascending in m·n"));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &(m, n) in sizes {
        let instance = BenchInstance::generate(m, n, opts.rho, opts.seed)?;
        let mut samples = Vec::new();
        for _ in 0..opts.repetitions {
            let sol = run_fixed_iterations(algo, &instance, opts.iterations)?;
            // first difference is iteration 0
            samples.extend(sol.trace.iteration_nanos().into_iter().skip(1));
        }
        rows.push(BenchRow {
            solver: algo.name().to_string(),
            m,
            n,
            rho: opts.rho,
            median_iter_nanos: median(&mut samples),
        });
    }
    Ok(rows)
}

fn median(samples: &mut [u64]) -> u64 {
    if samples.is_empty() {
        return 0;
    }
    samples.sort_unstable();
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        samples[mid - 1] / 2 + samples[mid] / 2 + (samples[mid - 1] % 2 + samples[mid] % 2) / 2
    }
}

/// CSV with header `solver,m,n,rho,median_iter_nanos`.
pub fn write_bench_csv<W: Write>(writer: W, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if rows.is_empty() {
        w.write_record(["solver", "m", "n", "rho", "median_iter_nanos"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Growth factor of the median time between consecutive sizes.
pub fn growth_factors(rows: &[BenchRow]) -> Vec<f64> {
    rows.windows(2)
        .map(|w| w[1].median_iter_nanos as f64 / w[0].median_iter_nanos.max(1) as f64)
        .collect()
}

//! `cpcp`: generate synthetic instances, run solvers, benchmark iterations.
//!
//! Exit codes: 0 success, 2 bad input, 3 stopping rule not met at `max_iter`
//! (results are still written), 1 anything else.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use cpcp::baselines::{solve_fista, solve_ista, IstaConfig};
use cpcp::bench::{bench_per_iteration, growth_factors, write_bench_csv, Algorithm, BenchOptions};
use cpcp::fw::{solve_fw_constrained, solve_fwp, ConstrainedConfig};
use cpcp::fwt::{solve_fw_penalized, solve_fwt, PenalizedConfig};
use cpcp::io::{
    export_trace, load_dense, load_instance_info, load_observed, read_coordinates, save_dense, save_instance,
    write_coordinates, ProblemDir,
};
use cpcp::model::{CpcpProblem, ObservationMask, Solution, SolveStatus};
use cpcp::synth::{gen_synthetic, SyntheticSpec};
use cpcp::CpcpError;

const EXIT_FAILURE: u8 = 1;
const EXIT_BAD_INPUT: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "cpcp", version, about = "Low-rank plus sparse recovery from partial observations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic instance (observed.mtx, L0.mtx, S0.mtx, instance.json).
    Generate {
        /// JSON file with fields m, n, r, sparse_fraction, sparse_amplitude, noise_std, rho, seed.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the instance in a problem directory.
    Solve {
        #[arg(long)]
        algo: Algorithm,
        #[arg(long)]
        problem: PathBuf,
        /// Solver configuration as JSON; its radii or weights define the problem.
        #[arg(long)]
        config: PathBuf,
        /// Trace file; `.jsonl` selects JSON-lines, anything else CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Directory for L.mtx, S.mtx and summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Median per-iteration time over a sweep of sizes.
    Bench {
        #[arg(long)]
        algo: Algorithm,
        /// Comma-separated sizes such as `10000x250,10000x500`, ascending in m·n.
        #[arg(long, value_delimiter = ',', value_parser = parse_size)]
        sweep: Vec<(usize, usize)>,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        /// Timed iterations per run; iteration 0 is run on top and discarded.
        #[arg(long, default_value_t = 10)]
        iterations: usize,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV report path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let (m, n) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected MxN, got `{s}`"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    let (m, n) = (parse(m)?, parse(n)?);
    if m == 0 || n == 0 {
        return Err(format!("`{s}` has a zero dimension"));
    }
    Ok((m, n))
}

/// Thread cap from `CPCP_THREADS`; the solvers themselves are sequential.
fn thread_cap() -> Result<usize> {
    match std::env::var("CPCP_THREADS") {
        Err(std::env::VarError::NotPresent) => Ok(1),
        Err(e) => bail!("CPCP_THREADS: {e}"),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => bail!("CPCP_THREADS must be a positive integer, got `{v}`"),
        },
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

fn is_input_error(err: &anyhow::Error) -> bool {
    err.chain().any(|cause| {
        if let Some(e) = cause.downcast_ref::<CpcpError>() {
            return !matches!(e, CpcpError::ObjectiveIncreased { .. });
        }
        cause.is::<serde_json::Error>() || cause.is::<std::io::Error>()
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = thread_cap() {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_BAD_INPUT);
    }
    let outcome = match cli.command {
        Command::Generate { spec, out } => generate(&spec, &out).map(|()| true),
        Command::Solve {
            algo,
            problem,
            config,
            trace,
            out,
        } => solve(algo, &problem, &config, trace.as_deref(), out.as_deref()),
        Command::Bench {
            algo,
            sweep,
            rho,
            iterations,
            reps,
            seed,
            out,
        } => {
            let opts = BenchOptions {
                iterations,
                repetitions: reps,
                rho,
                seed,
            };
            bench(algo, &sweep, &opts, out.as_deref()).map(|()| true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_NOT_CONVERGED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_input_error(&e) { EXIT_BAD_INPUT } else { EXIT_FAILURE })
        }
    }
}

fn generate(spec_path: &Path, out: &Path) -> Result<()> {
    let spec: SyntheticSpec = read_json(spec_path)?;
    let truth = gen_synthetic(&spec)?;
    save_instance(out, &spec, &truth).with_context(|| format!("writing {}", out.display()))?;
    eprintln!(
        "wrote {}x{} instance with {} observed entries to {}",
        spec.m,
        spec.n,
        truth.mask.len(),
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct Summary {
    algo: String,
    converged: bool,
    iterations: usize,
    objective: f64,
    dual_gap: Option<f64>,
    rank: usize,
    nnz: usize,
    wall_seconds: f64,
    rel_error_l: Option<f64>,
    rel_error_s: Option<f64>,
}

/// Returns whether the configured stopping rule fired.
fn solve(algo: Algorithm, dir: &Path, config: &Path, trace: Option<&Path>, out: Option<&Path>) -> Result<bool> {
    let (mask, observed) = load_observed(dir).with_context(|| format!("loading problem {}", dir.display()))?;
    let problem_mask = mask.clone();
    let (solution, has_stopping_rule) = match algo {
        Algorithm::Fw | Algorithm::Fwp => {
            let cfg: ConstrainedConfig = read_json(config)?;
            let problem = CpcpProblem::constrained(mask, observed, cfg.tau_l, cfg.tau_s)?;
            let sol = if algo == Algorithm::Fw {
                solve_fw_constrained(&problem, &cfg)?
            } else {
                solve_fwp(&problem, &cfg)?
            };
            (sol, cfg.gap_tol.is_some())
        }
        Algorithm::FwPen | Algorithm::Fwt => {
            let cfg: PenalizedConfig = read_json(config)?;
            let problem = CpcpProblem::penalized(mask, observed, cfg.lambda_l, cfg.lambda_s)?;
            let sol = if algo == Algorithm::Fwt {
                solve_fwt(&problem, &cfg)?
            } else {
                solve_fw_penalized(&problem, &cfg)?
            };
            (sol, true)
        }
        Algorithm::Ista | Algorithm::Fista => {
            let cfg: IstaConfig = read_json(config)?;
            let problem = CpcpProblem::penalized(mask, observed, cfg.lambda_l, cfg.lambda_s)?;
            let sol = if algo == Algorithm::Ista {
                solve_ista(&problem, &cfg)?
            } else {
                solve_fista(&problem, &cfg)?
            };
            (sol, cfg.target_objective.is_some())
        }
    };

    if let Some(path) = trace {
        export_trace(path, &solution.trace).with_context(|| format!("writing {}", path.display()))?;
    }
    let summary = summarize(algo, dir, &problem_mask, &solution)?;
    if let Some(out) = out {
        write_solution(out, &problem_mask, &solution, &summary)
            .with_context(|| format!("writing {}", out.display()))?;
    }
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, &summary)?;
    writeln!(stdout)?;
    Ok(solution.status == SolveStatus::Converged || !has_stopping_rule)
}

/// Relative errors are filled in when the directory holds a generated instance.
fn summarize(algo: Algorithm, dir: &Path, mask: &ObservationMask, solution: &Solution) -> Result<Summary> {
    let last = solution.trace.last().context("solver produced an empty trace")?;
    let files = ProblemDir(dir.to_path_buf());
    let (mut rel_error_l, mut rel_error_s) = (None, None);
    if load_instance_info(dir)?.is_some() && files.low_rank().exists() && files.sparse().exists() {
        let l0 = load_dense(&files.low_rank())?;
        let l = solution.low_rank.to_dense();
        if l0.dim() == l.dim() {
            let num = (&l - &l0).iter().map(|x| x * x).sum::<f64>();
            let den = l0.iter().map(|x| x * x).sum::<f64>();
            rel_error_l = Some((num / den).sqrt());
            let (_, _, s0) = read_coordinates(&files.sparse())?;
            let mut diff = solution.sparse.to_dense(mask);
            for ((i, j), v) in s0.iter().copied() {
                diff[[i, j]] -= v;
            }
            let num = diff.iter().map(|x| x * x).sum::<f64>();
            let den = s0.iter().map(|(_, v)| v * v).sum::<f64>();
            rel_error_s = Some(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() });
        }
    }
    Ok(Summary {
        algo: algo.to_string(),
        converged: solution.status == SolveStatus::Converged,
        iterations: solution.iterations(),
        objective: last.objective,
        dual_gap: last.dual_gap,
        rank: last.rank,
        nnz: last.nnz,
        wall_seconds: last.wall_nanos as f64 * 1e-9,
        rel_error_l,
        rel_error_s,
    })
}

/// Writes dense `L.mtx`, the nonzeros of S as `S.mtx`, and `summary.json`.
fn write_solution(out: &Path, mask: &ObservationMask, solution: &Solution, summary: &Summary) -> Result<()> {
    std::fs::create_dir_all(out)?;
    save_dense(&out.join("L.mtx"), &solution.low_rank.to_dense())?;
    let entries: Vec<_> = mask
        .iter()
        .zip(solution.sparse.values.as_slice())
        .filter(|(_, v)| **v != 0.0)
        .map(|(ij, v)| (ij, *v))
        .collect();
    write_coordinates(&out.join("S.mtx"), mask.rows(), mask.cols(), &entries)?;
    let mut w = File::create(out.join("summary.json"))?;
    serde_json::to_writer_pretty(&mut w, summary)?;
    writeln!(w)?;
    Ok(())
}

fn bench(algo: Algorithm, sweep: &[(usize, usize)], opts: &BenchOptions, out: Option<&Path>) -> Result<()> {
    let rows = bench_per_iteration(algo, sweep, opts)?;
    match out {
        Some(path) => write_bench_csv(File::create(path)?, &rows)?,
        None => write_bench_csv(std::io::stdout().lock(), &rows)?,
    }
    for (w, g) in rows.windows(2).zip(growth_factors(&rows)) {
        eprintln!(
            "{algo}: {}x{} -> {}x{} time factor {g:.2}",
            w[0].m, w[0].n, w[1].m, w[1].n
        );
    }
    Ok(())
}

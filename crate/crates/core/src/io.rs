//! File formats: MatrixMarket for matrices, CSV and JSON-lines for traces,
//! and the problem directory layout used by the command-line tool.
//!
//! Values are written with Rust's shortest round-trip float formatting, so
//! save → load reproduces every value bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{CpcpError, Result};
use crate::model::{IterationRecord, MaskedValues, ObservationMask, SolverTrace, TraceRow};
use crate::synth::{GroundTruth, SyntheticSpec};

const COORDINATE_HEADER: &str = "%%MatrixMarket matrix coordinate real general";
const ARRAY_HEADER: &str = "%%MatrixMarket matrix array real general";

/// A sparse matrix as (rows, cols, ((i, j), value) entries), 0-based.
pub type Coordinates = (usize, usize, Vec<((usize, usize), f64)>);

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> CpcpError {
    CpcpError::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

/// Non-comment lines with their 1-based line numbers, after the header.
struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_data(&mut self) -> Result<Option<(usize, String)>> {
        for line in self.inner.by_ref() {
            self.number += 1;
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            return Ok(Some((self.number, t.to_string())));
        }
        Ok(None)
    }
}

fn open_matrix_market(path: &Path, expected_header: &str) -> Result<Lines<BufReader<File>>> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let normalized = header.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    if normalized != expected_header.to_lowercase() {
        return Err(parse_err(path, 1, format!("expected header `{expected_header}`, found `{header}`")));
    }
    Ok(Lines {
        inner: lines,
        number: 1,
    })
}

fn parse_index(path: &Path, line: usize, token: &str, bound: usize, what: &str) -> Result<usize> {
    let idx: u64 = token.parse().map_err(|e: std::num::ParseIntError| {
        let reason = match e.kind() {
            std::num::IntErrorKind::PosOverflow => format!("{what} index `{token}` overflows"),
            _ => format!("invalid {what} index `{token}`"),
        };
        parse_err(path, line, reason)
    })?;
    let idx = usize::try_from(idx).map_err(|_| parse_err(path, line, format!("{what} index `{token}` overflows")))?;
    if idx == 0 || idx > bound {
        return Err(parse_err(path, line, format!("{what} index {idx} outside 1..={bound}")));
    }
    Ok(idx - 1)
}

fn parse_count(path: &Path, line: usize, token: Option<&str>, what: &str) -> Result<usize> {
    let token = token.ok_or_else(|| parse_err(path, line, format!("missing {what}")))?;
    token
        .parse()
        .map_err(|_| parse_err(path, line, format!("invalid {what} `{token}`")))
}

fn parse_value(path: &Path, line: usize, token: Option<&str>) -> Result<f64> {
    let token = token.ok_or_else(|| parse_err(path, line, "missing value"))?;
    let v: f64 = token
        .parse()
        .map_err(|_| parse_err(path, line, format!("invalid value `{token}`")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite value `{token}`")));
    }
    Ok(v)
}

/// Writes entries in MatrixMarket coordinate format (1-based indices).
pub fn write_coordinates(path: &Path, rows: usize, cols: usize, entries: &[((usize, usize), f64)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{COORDINATE_HEADER}")?;
    writeln!(w, "{rows} {cols} {}", entries.len())?;
    for &((i, j), v) in entries {
        writeln!(w, "{} {} {v:e}", i + 1, j + 1)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a MatrixMarket coordinate file; entries keep file order.
pub fn read_coordinates(path: &Path) -> Result<Coordinates> {
    let (rows, cols, entries) = read_numbered(path)?;
    Ok((rows, cols, entries.into_iter().map(|(_, e)| e).collect()))
}

/// Coordinate entries tagged with their line numbers.
#[allow(clippy::type_complexity)]
fn read_numbered(path: &Path) -> Result<(usize, usize, Vec<(usize, ((usize, usize), f64))>)> {
    let mut lines = open_matrix_market(path, COORDINATE_HEADER)?;
    let (ln, size) = lines
        .next_data()?
        .ok_or_else(|| parse_err(path, lines.number, "missing size line"))?;
    let mut it = size.split_whitespace();
    let rows = parse_count(path, ln, it.next(), "row count")?;
    let cols = parse_count(path, ln, it.next(), "column count")?;
    let nnz = parse_count(path, ln, it.next(), "entry count")?;
    if it.next().is_some() {
        return Err(parse_err(path, ln, "size line has extra fields"));
    }
    let mut entries = Vec::with_capacity(nnz.min(1 << 24));
    while let Some((ln, line)) = lines.next_data()? {
        if entries.len() == nnz {
            return Err(parse_err(path, ln, format!("more than the declared {nnz} entries")));
        }
        let mut it = line.split_whitespace();
        let i = parse_index(path, ln, it.next().unwrap_or(""), rows, "row")?;
        let j = parse_index(
            path,
            ln,
            it.next().ok_or_else(|| parse_err(path, ln, "missing column index"))?,
            cols,
            "column",
        )?;
        let v = parse_value(path, ln, it.next())?;
        if it.next().is_some() {
            return Err(parse_err(path, ln, "entry line has extra fields"));
        }
        entries.push((ln, ((i, j), v)));
    }
    if entries.len() != nnz {
        return Err(parse_err(
            path,
            lines.number,
            format!("declared {nnz} entries, found {}", entries.len()),
        ));
    }
    Ok((rows, cols, entries))
}

/// Saves P_Ω[M] as a coordinate file.
pub fn save_masked(path: &Path, mask: &ObservationMask, values: &MaskedValues) -> Result<()> {
    if values.len() != mask.len() {
        return Err(CpcpError::dims(mask.len(), values.len()));
    }
    let entries: Vec<_> = mask.iter().zip(values.as_slice().iter().copied()).collect();
    write_coordinates(path, mask.rows(), mask.cols(), &entries)
}

/// Loads a coordinate file as a mask plus the values at its positions.
pub fn load_masked(path: &Path) -> Result<(ObservationMask, MaskedValues)> {
    let (rows, cols, mut numbered) = read_numbered(path)?;
    numbered.sort_by_key(|&(ln, (ij, _))| (ij, ln));
    if let Some(w) = numbered.windows(2).find(|w| w[0].1 .0 == w[1].1 .0) {
        let (i, j) = w[0].1 .0;
        return Err(parse_err(path, w[1].0, format!("duplicate entry ({}, {})", i + 1, j + 1)));
    }
    let entries: Vec<_> = numbered.into_iter().map(|(_, e)| e).collect();
    let values = MaskedValues(entries.iter().map(|&(_, v)| v).collect());
    let mask = ObservationMask::new(rows, cols, entries.into_iter().map(|(ij, _)| ij).collect())?;
    Ok((mask, values))
}

/// Saves a dense matrix in MatrixMarket array format (column-major).
pub fn save_dense(path: &Path, a: &Array2<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{ARRAY_HEADER}")?;
    writeln!(w, "{} {}", a.nrows(), a.ncols())?;
    for col in a.columns() {
        for v in col {
            writeln!(w, "{v:e}")?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_dense(path: &Path) -> Result<Array2<f64>> {
    let mut lines = open_matrix_market(path, ARRAY_HEADER)?;
    let (ln, size) = lines
        .next_data()?
        .ok_or_else(|| parse_err(path, lines.number, "missing size line"))?;
    let mut it = size.split_whitespace();
    let rows = parse_count(path, ln, it.next(), "row count")?;
    let cols = parse_count(path, ln, it.next(), "column count")?;
    let total = rows
        .checked_mul(cols)
        .ok_or_else(|| parse_err(path, ln, "rows·cols overflows"))?;
    let mut data = Vec::with_capacity(total.min(1 << 24));
    while let Some((ln, line)) = lines.next_data()? {
        if data.len() == total {
            return Err(parse_err(path, ln, format!("more than the declared {total} values")));
        }
        let mut it = line.split_whitespace();
        data.push(parse_value(path, ln, it.next())?);
        if it.next().is_some() {
            return Err(parse_err(path, ln, "value line has extra fields"));
        }
    }
    if data.len() != total {
        return Err(parse_err(
            path,
            lines.number,
            format!("declared {total} values, found {}", data.len()),
        ));
    }
    // column-major file order
    Ok(Array2::from_shape_vec((cols, rows), data)
        .expect("length checked")
        .reversed_axes()
        .as_standard_layout()
        .into_owned())
}

/// Trace as CSV with header
/// `k,objective,dual_gap,step_a,step_b,rank,nnz,wall_nanos,U_L,U_S`;
/// missing values are empty fields.
pub fn write_trace_csv<W: Write>(writer: W, trace: &SolverTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in trace.records() {
        w.serialize(TraceRow::from(r))?;
    }
    if trace.is_empty() {
        w.write_record(TRACE_COLUMNS)?;
    }
    w.flush()?;
    Ok(())
}

pub const TRACE_COLUMNS: [&str; 10] = [
    "k",
    "objective",
    "dual_gap",
    "step_a",
    "step_b",
    "rank",
    "nnz",
    "wall_nanos",
    "U_L",
    "U_S",
];

pub fn read_trace_csv<R: std::io::Read>(reader: R) -> Result<SolverTrace> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.iter().ne(TRACE_COLUMNS.iter().copied()) {
        return Err(CpcpError::param("trace", format!("unexpected CSV header {headers:?}")));
    }
    let mut records = Vec::new();
    for row in r.deserialize::<TraceRow>() {
        records.push(IterationRecord::from(row?));
    }
    checked_trace(records)
}

pub fn write_trace_jsonl<W: Write>(mut writer: W, trace: &SolverTrace) -> Result<()> {
    for r in trace.records() {
        serde_json::to_writer(&mut writer, &TraceRow::from(r))?;
        writeln!(writer)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_trace_jsonl<R: BufRead>(reader: R) -> Result<SolverTrace> {
    let mut records = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: TraceRow = serde_json::from_str(&line)?;
        records.push(IterationRecord::from(row));
    }
    checked_trace(records)
}

fn checked_trace(records: Vec<IterationRecord>) -> Result<SolverTrace> {
    let mut prev: Option<usize> = None;
    for r in &records {
        let ok = match prev {
            None => r.k == 0,
            Some(p) => r.k > p,
        };
        if !ok {
            return Err(CpcpError::param("trace", format!("record index {} out of order", r.k)));
        }
        prev = Some(r.k);
    }
    Ok(records.into_iter().collect())
}

/// Writes a trace to `path`, as JSON-lines when the extension is `jsonl`
/// and as CSV otherwise.
pub fn export_trace(path: &Path, trace: &SolverTrace) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    if path.extension().is_some_and(|e| e == "jsonl") {
        write_trace_jsonl(file, trace)
    } else {
        write_trace_csv(file, trace)
    }
}

pub fn import_trace(path: &Path) -> Result<SolverTrace> {
    let file = BufReader::new(File::open(path)?);
    if path.extension().is_some_and(|e| e == "jsonl") {
        read_trace_jsonl(file)
    } else {
        read_trace_csv(file)
    }
}

/// Summary stored next to a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceInfo {
    pub spec: SyntheticSpec,
    #[serde(rename = "tau_L_true")]
    pub tau_l_true: f64,
    #[serde(rename = "tau_S_true")]
    pub tau_s_true: f64,
}

/// Files of a problem directory.
pub struct ProblemDir(pub PathBuf);

impl ProblemDir {
    pub fn observed(&self) -> PathBuf {
        self.0.join("observed.mtx")
    }

    pub fn low_rank(&self) -> PathBuf {
        self.0.join("L0.mtx")
    }

    pub fn sparse(&self) -> PathBuf {
        self.0.join("S0.mtx")
    }

    pub fn info(&self) -> PathBuf {
        self.0.join("instance.json")
    }
}

/// Writes `observed.mtx`, `L0.mtx`, `S0.mtx` and `instance.json` into `dir`.
pub fn save_instance(dir: &Path, spec: &SyntheticSpec, truth: &GroundTruth) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let files = ProblemDir(dir.to_path_buf());
    save_masked(&files.observed(), &truth.mask, &truth.observed)?;
    save_dense(&files.low_rank(), &truth.l0)?;
    let (m, n) = truth.shape();
    write_coordinates(&files.sparse(), m, n, &truth.s0)?;
    let info = InstanceInfo {
        spec: spec.clone(),
        tau_l_true: truth.tau_l_true,
        tau_s_true: truth.tau_s_true,
    };
    let mut w = BufWriter::new(File::create(files.info())?);
    serde_json::to_writer_pretty(&mut w, &info)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Reads the observed data of a problem directory.
pub fn load_observed(dir: &Path) -> Result<(ObservationMask, MaskedValues)> {
    load_masked(&ProblemDir(dir.to_path_buf()).observed())
}

/// Reads `instance.json` when present.
pub fn load_instance_info(dir: &Path) -> Result<Option<InstanceInfo>> {
    let path = ProblemDir(dir.to_path_buf()).info();
    if !path.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_reader(BufReader::new(File::open(path)?))?))
}

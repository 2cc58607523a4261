//! Plain-text matrix files, trace CSV, and the JSON run report.
//!
//! Matrix files look like
//!
//! ```text
//! % optional comment lines start with '%'
//! 2 2
//! 1.0000000000000000e0 0.0000000000000000e0
//! 0.0000000000000000e0 5.0000000000000000e-1
//! ```
//!
//! The first non-comment line holds the dimensions; each following line is
//! one row. Values are written with 17 significant digits, so reading a
//! written file reproduces the matrix bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::Tolerances;
use crate::pencil::AdmissibilityReport;
use crate::solver::{IterationTrace, SolverConfig, SweepRow, Termination};
use crate::Matrix;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

fn parse_err(line: usize, msg: impl Into<String>) -> FileError {
    FileError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parses the matrix text format. Line numbers in errors are 1-based.
pub fn parse_matrix(text: &str) -> Result<Matrix, FileError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));

    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing dimension line"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(parse_err(
            hline,
            format!("expected `rows cols`, found `{header}`"),
        ));
    }
    let parse_dim = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| parse_err(hline, format!("bad dimension `{s}`")))
    };
    let (rows, cols) = (parse_dim(dims[0])?, parse_dim(dims[1])?);

    let mut data = Vec::with_capacity(rows * cols);
    let mut last_line = hline;
    for _ in 0..rows {
        let (ln, row) = lines.next().ok_or_else(|| {
            parse_err(
                last_line + 1,
                format!("expected {rows} rows, found {}", data.len() / cols.max(1)),
            )
        })?;
        last_line = ln;
        let mut count = 0;
        for tok in row.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(ln, format!("bad number `{tok}`")))?;
            if !v.is_finite() {
                return Err(parse_err(ln, format!("non-finite value `{tok}`")));
            }
            data.push(v);
            count += 1;
        }
        if count != cols {
            return Err(parse_err(
                ln,
                format!("expected {cols} values, found {count}"),
            ));
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, format!("unexpected data after {rows} rows")));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

/// Renders a matrix in the file format with 17 significant digits.
pub fn format_matrix(m: &Matrix) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_matrix(path: &Path) -> Result<Matrix, FileError> {
    let text = fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_matrix(&text)
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<(), FileError> {
    write_text(path, &format_matrix(m))
}

fn write_text(path: &Path, text: &str) -> Result<(), FileError> {
    fs::write(path, text).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Header of the trace CSV.
pub const TRACE_HEADER: &str = "iter,error,elapsed_s,err_after_W,err_after_T,err_after_UB";

/// Renders the iteration history as CSV, one row per outer iteration.
pub fn format_trace_csv(trace: &[IterationTrace]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for t in trace {
        let _ = writeln!(
            out,
            "{},{:.16e},{:.6},{:.16e},{:.16e},{:.16e}",
            t.iter, t.error, t.elapsed_s, t.err_after_w, t.err_after_t, t.err_after_ub
        );
    }
    out
}

pub fn write_trace_csv(path: &Path, trace: &[IterationTrace]) -> Result<(), FileError> {
    write_text(path, &format_trace_csv(trace))
}

/// Version of the JSON report layout.
pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputInfo {
    /// `None` when `E` defaulted to the identity.
    pub e_path: Option<String>,
    pub a_path: String,
    pub n: usize,
    pub rank_e: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSummary {
    pub r: usize,
    pub error: f64,
    pub termination: Termination,
    pub iterations: usize,
    pub elapsed_s: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTableRow {
    #[serde(flatten)]
    pub row: SweepRow,
    pub best: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub mode: String,
    pub best_r: usize,
    pub rows: Vec<SweepTableRow>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    pub e_hat: Option<String>,
    pub a_hat: Option<String>,
    pub trace: Option<String>,
    pub state: Option<String>,
}

/// Machine-readable summary printed by every CLI command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub command: String,
    pub input: InputInfo,
    pub tolerances: Tolerances,
    pub config: Option<SolverConfig>,
    pub result: Option<ResultSummary>,
    pub sweep: Option<SweepSummary>,
    pub outputs: OutputPaths,
    /// Analysis of the input pair (`analyze`) or of the computed pair.
    pub admissibility: AdmissibilityReport,
}

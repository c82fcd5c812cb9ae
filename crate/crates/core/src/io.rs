//! JSON files for channels and unitaries.
//!
//! ```text
//! channel:  { "dim": n,  "kraus":  [ M_1, ..., M_d ] }
//! unitary:  { "dim": N,  "matrix": M }
//! ```
//!
//! A matrix is an array of rows, each row an array of `[re, im]` pairs.
//! Unknown fields are rejected. Numbers are written with 17 significant
//! digits so that a write/read round trip is exact.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::channel::{ChannelError, KrausChannel};
use crate::matops::{ComplexMatrix, C64};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad shape: {0}")]
    Shape(String),
    #[error("entry {0} is not a finite number")]
    NonFinite(String),
    #[error("invalid channel: {0}")]
    Channel(#[from] ChannelError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile {
    dim: usize,
    kraus: Vec<RawMatrix>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitaryFile {
    dim: usize,
    matrix: RawMatrix,
}

fn to_matrix(raw: &RawMatrix, dim: usize, what: &str) -> Result<ComplexMatrix, FormatError> {
    if raw.len() != dim {
        return Err(FormatError::Shape(format!(
            "{what} has {} rows, expected {dim}",
            raw.len()
        )));
    }
    let mut data = Vec::with_capacity(dim * dim);
    for (i, row) in raw.iter().enumerate() {
        if row.len() != dim {
            return Err(FormatError::Shape(format!(
                "{what} row {i} has {} entries, expected {dim}",
                row.len()
            )));
        }
        for (j, &[re, im]) in row.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(FormatError::NonFinite(format!("{what}[{i}][{j}]")));
            }
            data.push(C64::new(re, im));
        }
    }
    ComplexMatrix::new(dim, dim, data)
        .map_err(|e| FormatError::Shape(format!("{what}: {e}")))
}

/// Parses a channel file and validates trace preservation within `tol`.
pub fn parse_channel(text: &str, tol: f64) -> Result<KrausChannel, FormatError> {
    let file: ChannelFile = serde_json::from_str(text)?;
    if file.dim == 0 {
        return Err(FormatError::Shape("dim must be at least 1".into()));
    }
    if file.kraus.is_empty() {
        return Err(FormatError::Channel(ChannelError::NoOperators));
    }
    let ops = file
        .kraus
        .iter()
        .enumerate()
        .map(|(j, m)| to_matrix(m, file.dim, &format!("kraus[{j}]")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(KrausChannel::with_tolerance(ops, tol)?)
}

/// Parses a square matrix file. Unitarity is left to the caller.
pub fn parse_unitary(text: &str) -> Result<ComplexMatrix, FormatError> {
    let file: UnitaryFile = serde_json::from_str(text)?;
    if file.dim == 0 {
        return Err(FormatError::Shape("dim must be at least 1".into()));
    }
    to_matrix(&file.matrix, file.dim, "matrix")
}

fn write_number(out: &mut String, x: f64) {
    // 17 significant digits; `-0` is normalised so files diff cleanly
    let x = if x == 0.0 { 0.0 } else { x };
    write!(out, "{x:.16e}").expect("writing to a String");
}

fn write_matrix(out: &mut String, m: &ComplexMatrix, indent: &str) {
    out.push_str("[\n");
    for i in 0..m.rows() {
        out.push_str(indent);
        out.push_str("  [");
        for j in 0..m.cols() {
            if j > 0 {
                out.push_str(", ");
            }
            let z = m[(i, j)];
            out.push('[');
            write_number(out, z.re);
            out.push_str(", ");
            write_number(out, z.im);
            out.push(']');
        }
        out.push(']');
        if i + 1 < m.rows() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str(indent);
    out.push(']');
}

pub fn channel_to_json(ch: &KrausChannel) -> String {
    let mut out = String::new();
    writeln!(out, "{{\n  \"dim\": {},\n  \"kraus\": [", ch.dim()).expect("writing to a String");
    for (j, k) in ch.ops().iter().enumerate() {
        out.push_str("    ");
        write_matrix(&mut out, k, "    ");
        if j + 1 < ch.num_ops() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("  ]\n}\n");
    out
}

pub fn unitary_to_json(u: &ComplexMatrix) -> String {
    let mut out = String::new();
    write!(out, "{{\n  \"dim\": {},\n  \"matrix\": ", u.rows()).expect("writing to a String");
    write_matrix(&mut out, u, "  ");
    out.push_str("\n}\n");
    out
}

fn read(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), FormatError> {
    std::fs::write(path, text).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_channel(path: &Path, tol: f64) -> Result<KrausChannel, FormatError> {
    parse_channel(&read(path)?, tol)
}

pub fn write_channel(path: &Path, ch: &KrausChannel) -> Result<(), FormatError> {
    write(path, &channel_to_json(ch))
}

pub fn read_unitary(path: &Path) -> Result<ComplexMatrix, FormatError> {
    parse_unitary(&read(path)?)
}

pub fn write_unitary(path: &Path, u: &ComplexMatrix) -> Result<(), FormatError> {
    write(path, &unitary_to_json(u))
}

//! Matrix and label files.
//!
//! * CSV: one matrix row per line, comma separated, no header.
//! * fbin: `b"FMAT"`, version `u32` = 1, rows `u64`, cols `u64`, then
//!   `rows × cols` `f64` values, row-major. All integers and floats are
//!   little-endian.
//!
//! Label files hold one integer per line.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::matrix::FeatureMatrix;
use crate::error::{DaError, Result};

pub const FBIN_MAGIC: &[u8; 4] = b"FMAT";
pub const FBIN_VERSION: u32 = 1;
const FBIN_HEADER_LEN: usize = 4 + 4 + 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    Csv,
    Fbin,
}

impl MatrixFormat {
    /// `.fbin` → fbin, anything else → CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("fbin") => MatrixFormat::Fbin,
            _ => MatrixFormat::Csv,
        }
    }
}

pub fn encode_fbin(x: &FeatureMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(FBIN_HEADER_LEN + 8 * x.rows() * x.cols());
    out.extend_from_slice(FBIN_MAGIC);
    out.extend_from_slice(&FBIN_VERSION.to_le_bytes());
    out.extend_from_slice(&(x.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(x.cols() as u64).to_le_bytes());
    for v in x.to_row_major() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_fbin(bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.len() < FBIN_HEADER_LEN {
        return Err(DaError::data(format!("fbin header truncated ({} bytes)", bytes.len())));
    }
    if &bytes[0..4] != FBIN_MAGIC {
        return Err(DaError::data("malformed fbin header: bad magic bytes"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != FBIN_VERSION {
        return Err(DaError::data(format!("unsupported fbin version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let cols = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes")) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| DaError::data("fbin dimensions overflow"))?;
    let payload = &bytes[FBIN_HEADER_LEN..];
    if payload.len() != expected {
        return Err(DaError::data(format!(
            "fbin dimension mismatch: header says {rows}x{cols} ({expected} bytes), payload has {} bytes",
            payload.len()
        )));
    }
    let mut values = Vec::with_capacity(rows * cols);
    for (idx, chunk) in payload.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        if !v.is_finite() {
            return Err(DaError::data(format!(
                "non-finite value at row {}, column {}",
                idx / cols + 1,
                idx % cols + 1
            )));
        }
        values.push(v);
    }
    FeatureMatrix::from_row_major(rows, cols, &values)
}

pub fn parse_csv(text: &str) -> Result<FeatureMatrix> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut count = 0;
        for (col_no, token) in line.split(',').enumerate() {
            let token = token.trim();
            let v: f64 = token.parse().map_err(|_| {
                DaError::data(format!(
                    "cannot parse {token:?} at row {}, column {}",
                    line_no + 1,
                    col_no + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(DaError::data(format!(
                    "non-finite value {token:?} at row {}, column {}",
                    line_no + 1,
                    col_no + 1
                )));
            }
            values.push(v);
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err(DaError::data(format!(
                    "dimension mismatch at row {}: {count} columns, expected {c}",
                    line_no + 1
                )))
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| DaError::data("empty CSV matrix"))?;
    FeatureMatrix::from_row_major(rows, cols, &values)
}

pub fn format_csv(x: &FeatureMatrix) -> String {
    let mut out = String::new();
    for row in x.as_matrix().row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn with_path(path: &Path, err: DaError) -> DaError {
    match err {
        DaError::Data(msg) => DaError::Data(format!("{}: {msg}", path.display())),
        other => other,
    }
}

pub fn load_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| DaError::io(path, e))?;
    let parsed = match format {
        MatrixFormat::Fbin => decode_fbin(&bytes),
        MatrixFormat::Csv => {
            let text = String::from_utf8(bytes).map_err(|_| DaError::data("CSV is not valid UTF-8"));
            text.and_then(|t| parse_csv(&t))
        }
    };
    parsed.map_err(|e| with_path(path, e))
}

/// Loads with the format inferred from the extension.
pub fn load_matrix_auto(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    load_matrix(path, MatrixFormat::from_path(path))
}

pub fn save_matrix(x: &FeatureMatrix, path: impl AsRef<Path>, format: MatrixFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        MatrixFormat::Fbin => encode_fbin(x),
        MatrixFormat::Csv => format_csv(x).into_bytes(),
    };
    fs::write(path, bytes).map_err(|e| DaError::io(path, e))
}

pub fn parse_labels(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<usize>()
                .map_err(|_| DaError::data(format!("cannot parse label {:?} on line {}", l.trim(), i + 1)))
        })
        .collect()
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| DaError::io(path, e))?;
    parse_labels(&text).map_err(|e| with_path(path, e))
}

pub fn save_labels(labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::with_capacity(labels.len() * 3);
    for l in labels {
        text.push_str(&l.to_string());
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| DaError::io(path, e))
}

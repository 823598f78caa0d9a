//! On-disk formats.
//!
//! Feature matrices (`.fmx`): the ASCII magic `FMX1`, then `n_rows` and
//! `n_cols` as little-endian `u64`, then `n_rows * n_cols` little-endian
//! binary64 values in row-major order. Nothing follows the payload.
//!
//! Models (`.json`): a JSON object with exactly the members `version` (1),
//! `dim`, `eps`, `mu`, `u`, `w` and `a`, written in that order. The raw
//! pre-softplus `u` is stored rather than `d`. Numbers use the shortest
//! decimal form that round-trips to the same binary64 value.
//!
//! Writers do no locking; callers must not write the same path concurrently.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LcmError, Result};
use crate::lcm::{FeatureBatch, LcmParams};

const MAGIC: &[u8; 4] = b"FMX1";
const HEADER_LEN: u64 = 20;

pub fn encode_feature_matrix(batch: &FeatureBatch) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN as usize + 8 * batch.data().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(batch.n_rows() as u64).to_le_bytes());
    out.extend_from_slice(&(batch.n_cols() as u64).to_le_bytes());
    for v in batch.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_feature_matrix(bytes: &[u8]) -> Result<FeatureBatch> {
    let actual = bytes.len() as u64;
    if actual < HEADER_LEN {
        if bytes.len() >= 4 && &bytes[..4] != MAGIC {
            return Err(LcmError::Magic {
                found: bytes[..4].to_vec(),
            });
        }
        return Err(LcmError::Length {
            expected: HEADER_LEN,
            actual,
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(LcmError::Magic {
            found: bytes[..4].to_vec(),
        });
    }
    let n_rows = u64::from_le_bytes(bytes[4..12].try_into().unwrap());
    let n_cols = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let expected = n_rows
        .checked_mul(n_cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| LcmError::input(format!("header dimensions {n_rows}x{n_cols} overflow")))?;
    if expected != actual {
        return Err(LcmError::Length { expected, actual });
    }
    if n_rows == 0 || n_cols == 0 {
        return Err(LcmError::input(format!(
            "feature matrix must be at least 1x1, header says {n_rows}x{n_cols}"
        )));
    }
    let data: Vec<f64> = bytes[HEADER_LEN as usize..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FeatureBatch::new(data, n_rows as usize, n_cols as usize)
}

pub fn read_feature_matrix(path: impl AsRef<Path>) -> Result<FeatureBatch> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| LcmError::io(path, e))?;
    decode_feature_matrix(&bytes)
}

pub fn write_feature_matrix(batch: &FeatureBatch, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_feature_matrix(batch)).map_err(|e| LcmError::io(path, e))
}

/// Headerless numeric CSV, one sample per row.
pub fn parse_csv(text: &str) -> Result<FeatureBatch> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut data = Vec::new();
    let mut n_cols = None;
    let mut n_rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| LcmError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            column: 0,
            message: e.to_string(),
        })?;
        let line = record.position().map_or(n_rows as u64 + 1, |p| p.line());
        let expected = *n_cols.get_or_insert(record.len());
        if record.len() != expected {
            return Err(LcmError::Ragged {
                line,
                expected,
                found: record.len(),
            });
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| LcmError::Csv {
                line,
                column: j + 1,
                message: format!("cannot parse {field:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(LcmError::Data {
                    row: n_rows,
                    col: j,
                    value: v,
                });
            }
            data.push(v);
        }
        n_rows += 1;
    }
    FeatureBatch::new(data, n_rows, n_cols.unwrap_or(0))
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<FeatureBatch> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| LcmError::io(path, e))?;
    parse_csv(&text)
}

/// Reads `.csv` files as CSV and everything else as the binary format.
pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureBatch> {
    let path = path.as_ref();
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        read_csv(path)
    } else {
        read_feature_matrix(path)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: i64,
    dim: usize,
    eps: f64,
    mu: Vec<f64>,
    u: Vec<f64>,
    w: Vec<f64>,
    a: Vec<f64>,
}

pub fn model_to_json(p: &LcmParams) -> Result<String> {
    p.validate()?;
    let file = ModelFile {
        version: 1,
        dim: p.dim(),
        eps: p.eps,
        mu: p.mu.clone(),
        u: p.u.clone(),
        w: p.w.clone(),
        a: p.a.clone(),
    };
    let mut text = serde_json::to_string_pretty(&file)
        .map_err(|e| LcmError::Schema(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn model_from_json(text: &str) -> Result<LcmParams> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| LcmError::Schema(e.to_string()))?;
    match value.get("version") {
        Some(v) => match v.as_i64() {
            Some(1) => {}
            Some(found) => return Err(LcmError::Version { found }),
            None => return Err(LcmError::Schema(format!("version must be an integer, got {v}"))),
        },
        None => return Err(LcmError::Schema("missing member \"version\"".into())),
    }
    let file: ModelFile =
        serde_json::from_value(value).map_err(|e| LcmError::Schema(e.to_string()))?;
    for (name, arr) in [("mu", &file.mu), ("u", &file.u), ("w", &file.w), ("a", &file.a)] {
        if arr.len() != file.dim {
            return Err(LcmError::Schema(format!(
                "\"{name}\" has {} entries but dim is {}",
                arr.len(),
                file.dim
            )));
        }
    }
    LcmParams::new(file.u, file.w, file.a, file.eps, file.mu)
        .map_err(|e| LcmError::Schema(e.to_string()))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<LcmParams> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| LcmError::io(path, e))?;
    model_from_json(&text)
}

pub fn write_model(p: &LcmParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_json(p)?).map_err(|e| LcmError::io(path, e))
}

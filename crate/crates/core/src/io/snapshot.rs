//! Binary spectral snapshots.
//!
//! A snapshot is a single JSON header line
//! `{"schema":"qgsim-snapshot/1","n_max":N,"time":t,"count":C}` followed by
//! `C = (2N+1)²` records in lexicographic `(j₁, j₂)` order, each
//! `i32 j₁, i32 j₂, f64 re, f64 im`, all little-endian.

use serde::{Deserialize, Serialize};
use std::path::Path;

use num_complex::Complex;

use crate::error::{QgError, Result};
use crate::spectral::SpectralField;

pub const SNAPSHOT_SCHEMA: &str = "qgsim-snapshot/1";
const RECORD_BYTES: usize = 4 + 4 + 8 + 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub schema: String,
    pub n_max: usize,
    pub time: f64,
    pub count: usize,
}

pub fn encode_snapshot(t: &SpectralField<f64>, time: f64) -> Vec<u8> {
    let header = SnapshotHeader {
        schema: SNAPSHOT_SCHEMA.to_string(),
        n_max: t.n_max(),
        time,
        count: t.coeffs().len(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    out.reserve(header.count * RECORD_BYTES);
    for (j, c) in t.modes() {
        out.extend_from_slice(&j.j1.to_le_bytes());
        out.extend_from_slice(&j.j2.to_le_bytes());
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<(SpectralField<f64>, f64)> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| QgError::Schema("snapshot header line is missing".into()))?;
    let header: SnapshotHeader =
        serde_json::from_slice(&bytes[..nl]).map_err(|e| QgError::Schema(format!("snapshot header: {e}")))?;
    if header.schema != SNAPSHOT_SCHEMA {
        return Err(QgError::Schema(format!("unsupported snapshot schema `{}`", header.schema)));
    }
    let side = 2 * header.n_max + 1;
    if header.count != side * side {
        return Err(QgError::Schema(format!(
            "header count {} does not match n_max = {} ({} modes)",
            header.count,
            header.n_max,
            side * side
        )));
    }
    let body = &bytes[nl + 1..];
    if body.len() != header.count * RECORD_BYTES {
        return Err(QgError::Schema(format!(
            "expected {} records, found {} bytes of record data",
            header.count,
            body.len()
        )));
    }
    let template = SpectralField::<f64>::zeros(header.n_max);
    let mut coeffs = Vec::with_capacity(header.count);
    for ((j, _), rec) in template.modes().zip(body.chunks_exact(RECORD_BYTES)) {
        let j1 = i32::from_le_bytes(rec[0..4].try_into().unwrap());
        let j2 = i32::from_le_bytes(rec[4..8].try_into().unwrap());
        if (j1, j2) != (j.j1, j.j2) {
            return Err(QgError::Schema(format!("record ({j1}, {j2}) out of order, expected ({}, {})", j.j1, j.j2)));
        }
        let re = f64::from_le_bytes(rec[8..16].try_into().unwrap());
        let im = f64::from_le_bytes(rec[16..24].try_into().unwrap());
        coeffs.push(Complex::new(re, im));
    }
    let field = SpectralField::from_coeffs(header.n_max, coeffs)?;
    Ok((field, header.time))
}

pub fn write_snapshot(t: &SpectralField<f64>, time: f64, path: &Path) -> Result<()> {
    std::fs::write(path, encode_snapshot(t, time)).map_err(|e| QgError::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<(SpectralField<f64>, f64)> {
    let bytes = std::fs::read(path).map_err(|e| QgError::io(path, e))?;
    decode_snapshot(&bytes)
}

use std::path::Path;

use crate::error::{QgError, Result};
use crate::scalar::Real;
use crate::spectral::PhysicalField;

/// Binary P5 greyscale image of a grid field, `[min, max] → [0, 255]`.
/// Image row `q` holds grid samples `(x₁ = 2πp/m, x₂ = 2πq/m)` for `p = 0..m`.
pub fn encode_heatmap<T: Real>(f: &PhysicalField<T>) -> Vec<u8> {
    let m = f.m();
    let (lo, hi) = f.min_max();
    let span = hi - lo;
    let mut out = format!("P5\n{m} {m}\n255\n").into_bytes();
    out.reserve(m * m);
    for q in 0..m {
        for p in 0..m {
            let px = if span > T::zero() {
                let v = (f.get(p, q) - lo) / span * T::of(255.0);
                v.round().to_f64_lossy().clamp(0.0, 255.0) as u8
            } else {
                128
            };
            out.push(px);
        }
    }
    out
}

pub fn write_heatmap<T: Real>(f: &PhysicalField<T>, path: &Path) -> Result<()> {
    std::fs::write(path, encode_heatmap(f)).map_err(|e| QgError::io(path, e))
}

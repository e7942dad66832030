use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::diagnostics::DiagnosticsEngine;
use crate::error::{QgError, Result};
use crate::scalar::Real;
use crate::spectral::{SpectralField, WaveVector};

/// Initial-data families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum InitialKind {
    /// `cos(j·x + φ)` with a seed-determined phase.
    SingleMode(WaveVector),
    /// `cos x₁ + cos 2x₂`.
    TwoMode,
    /// Modes with Euclidean `lo ≤ |j| ≤ hi`, amplitude `|j|^slope`, random phases.
    RandomBand { lo: f64, hi: f64, slope: f64 },
}

impl fmt::Display for InitialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialKind::SingleMode(j) => write!(f, "single-mode({},{})", j.j1, j.j2),
            InitialKind::TwoMode => f.write_str("two-mode"),
            InitialKind::RandomBand { lo, hi, slope } => write!(f, "random-band({lo},{hi},{slope})"),
        }
    }
}

fn parse_args(s: &str, name: &str) -> std::result::Result<Vec<f64>, String> {
    let inner = s
        .strip_prefix(name)
        .and_then(|r| r.strip_prefix('('))
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| format!("expected `{name}(...)`, got `{s}`"))?;
    inner
        .split(',')
        .map(|a| a.trim().parse::<f64>().map_err(|e| format!("bad argument `{}` in `{s}`: {e}", a.trim())))
        .collect()
}

impl FromStr for InitialKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s == "two-mode" {
            return Ok(InitialKind::TwoMode);
        }
        if s.starts_with("single-mode") {
            let a = parse_args(s, "single-mode")?;
            if a.len() != 2 || a.iter().any(|v| v.fract() != 0.0 || v.abs() > i32::MAX as f64) {
                return Err(format!("single-mode takes two integers, got `{s}`"));
            }
            return Ok(InitialKind::SingleMode(WaveVector::new(a[0] as i32, a[1] as i32)));
        }
        if s.starts_with("random-band") {
            let a = parse_args(s, "random-band")?;
            if a.len() != 3 {
                return Err(format!("random-band takes (k_lo, k_hi, slope), got `{s}`"));
            }
            return Ok(InitialKind::RandomBand { lo: a[0], hi: a[1], slope: a[2] });
        }
        Err(format!("unknown initial kind `{s}` (expected single-mode(j1,j2), two-mode or random-band(lo,hi,slope))"))
    }
}

/// An initial-data family together with its grid sup-norm, written
/// `<kind>:<amplitude>` in configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    pub kind: InitialKind,
    pub amplitude: f64,
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec {
            kind: InitialKind::RandomBand { lo: 1.0, hi: 8.0, slope: -1.0 },
            amplitude: 0.05,
        }
    }
}

impl fmt::Display for InitialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.amplitude)
    }
}

impl FromStr for InitialSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (kind, amp) = s
            .rsplit_once(':')
            .ok_or_else(|| format!("expected `<kind>:<amplitude>`, got `{s}`"))?;
        let amplitude: f64 = amp.trim().parse().map_err(|e| format!("bad amplitude `{amp}`: {e}"))?;
        Ok(InitialSpec { kind: kind.parse()?, amplitude })
    }
}

/// Builds a mean-free Hermitian field of the given family whose maximum on
/// the oversampled diagnostics grid equals `amplitude`.
///
/// Random draws are made over the whole band in a fixed order, including
/// modes the truncation discards, so a band inside the truncation yields the
/// same field at every `n_max`.
pub fn generate_initial<T: Real>(kind: InitialKind, amplitude: T, n_max: usize, seed: u64) -> Result<SpectralField<T>> {
    if !(amplitude > T::zero()) || !amplitude.is_finite() {
        return Err(QgError::invalid("amplitude", format!("must be finite and > 0, got {amplitude}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = SpectralField::zeros(n_max);
    match kind {
        InitialKind::SingleMode(j) => {
            let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            field.set_pair(j, Complex::from_polar(T::of(0.5), T::of(phase)))?;
        }
        InitialKind::TwoMode => {
            let half = Complex::new(T::of(0.5), T::zero());
            field.set_pair(WaveVector::new(1, 0), half)?;
            field.set_pair(WaveVector::new(0, 2), half)?;
        }
        InitialKind::RandomBand { lo, hi, slope } => {
            if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() || !slope.is_finite() {
                return Err(QgError::invalid(
                    "random-band",
                    format!("need 0 < k_lo <= k_hi and a finite slope, got ({lo}, {hi}, {slope})"),
                ));
            }
            let r = hi.floor() as i32;
            let mut placed = 0usize;
            for j1 in 0..=r {
                for j2 in -r..=r {
                    let j = WaveVector::new(j1, j2);
                    if j1 == 0 && j2 <= 0 {
                        continue;
                    }
                    let norm = (j.norm_sq() as f64).sqrt();
                    if norm < lo || norm > hi {
                        continue;
                    }
                    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    if field.contains(j) {
                        let c = Complex::from_polar(norm.powf(slope), phase);
                        field.set_pair(j, Complex::new(T::of(c.re), T::of(c.im)))?;
                        placed += 1;
                    }
                }
            }
            if placed == 0 {
                return Err(QgError::invalid(
                    "random-band",
                    format!("no modes with {lo} <= |j| <= {hi} inside n_max = {n_max}"),
                ));
            }
        }
    }
    let sup = DiagnosticsEngine::new(n_max).sup_norm(&field)?;
    Ok(field.scaled(amplitude / sup))
}

/// [`generate_initial`] for an [`InitialSpec`].
pub fn initial_from_spec<T: Real>(spec: &InitialSpec, n_max: usize, seed: u64) -> Result<SpectralField<T>> {
    generate_initial(spec.kind, T::of(spec.amplitude), n_max, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sup(f: &SpectralField<f64>) -> f64 {
        DiagnosticsEngine::new(f.n_max()).sup_norm(f).unwrap()
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["single-mode(1,0):0.05", "two-mode:2", "random-band(1,8,-1):0.05"] {
            let spec: InitialSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("random-band(1,8):0.1".parse::<InitialSpec>().is_err());
        assert!("single-mode(1.5,0):0.1".parse::<InitialSpec>().is_err());
        assert!("blob:0.1".parse::<InitialSpec>().is_err());
        assert!("two-mode".parse::<InitialSpec>().is_err());
    }

    #[test]
    fn single_mode_is_a_phase_shifted_cosine() {
        let f: SpectralField<f64> = generate_initial(InitialKind::SingleMode(WaveVector::new(1, 0)), 0.05, 8, 3).unwrap();
        assert!((sup(&f) - 0.05).abs() <= 0.05 * 1e-12);
        let c = f.get(WaveVector::new(1, 0));
        let others: f64 = f.modes().filter(|(j, _)| j.j2 != 0 || j.j1.abs() != 1).map(|(_, c)| c.norm()).sum();
        assert_eq!(others, 0.0);
        assert!((c.norm() - 0.025).abs() < 0.025 * 1e-2);
        let g: SpectralField<f64> = generate_initial(InitialKind::SingleMode(WaveVector::new(1, 0)), 0.05, 8, 4).unwrap();
        assert_ne!(f, g);
    }

    #[test]
    fn two_mode_template() {
        let f: SpectralField<f64> = generate_initial(InitialKind::TwoMode, 0.3, 4, 0).unwrap();
        assert!((f.get(WaveVector::new(1, 0)).re - 0.075).abs() < 1e-15);
        assert!((f.get(WaveVector::new(0, 2)).re - 0.075).abs() < 1e-15);
        assert!((f.get(WaveVector::new(0, -2)).re - 0.075).abs() < 1e-15);
    }

    #[test]
    fn random_band_contract() {
        let kind = InitialKind::RandomBand { lo: 1.0, hi: 8.0, slope: -1.0 };
        let f: SpectralField<f64> = generate_initial(kind, 0.05, 16, 42).unwrap();
        f.check_invariants().unwrap();
        assert!((sup(&f) - 0.05).abs() <= 0.05 * 1e-6);
        for (j, c) in f.modes() {
            let r = (j.norm_sq() as f64).sqrt();
            if c.norm() > 0.0 {
                assert!((1.0..=8.0).contains(&r));
            }
        }
        assert_eq!(f, generate_initial(kind, 0.05, 16, 42).unwrap());
    }

    #[test]
    fn band_inside_truncation_is_resolution_independent() {
        let kind = InitialKind::RandomBand { lo: 1.0, hi: 5.0, slope: -1.0 };
        let a: SpectralField<f64> = generate_initial(kind, 1.0, 8, 7).unwrap();
        let b: SpectralField<f64> = generate_initial(kind, 1.0, 24, 7).unwrap();
        let scale = b.max_abs() / a.max_abs();
        let diff = a.resized(24).scaled(scale).try_sub(&b).unwrap().max_abs();
        assert!(diff < 1e-14, "{diff}");
    }

    #[test]
    fn errors() {
        let band = InitialKind::RandomBand { lo: 20.0, hi: 21.0, slope: 0.0 };
        assert!(generate_initial::<f64>(band, 1.0, 8, 0).is_err());
        let out = InitialKind::SingleMode(WaveVector::new(9, 0));
        assert!(generate_initial::<f64>(out, 1.0, 8, 0).is_err());
        assert!(generate_initial::<f64>(InitialKind::TwoMode, 0.0, 8, 0).is_err());
        let inverted = InitialKind::RandomBand { lo: 3.0, hi: 2.0, slope: 0.0 };
        assert!(generate_initial::<f64>(inverted, 1.0, 8, 0).is_err());
    }
}

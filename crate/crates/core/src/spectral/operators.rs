use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use super::SpectralField;
use crate::error::{QgError, Result};
use crate::scalar::Real;

/// Multiplies each coefficient by `|j|^s` (`Λ^s`). `s = 2α` realizes `(-Δ)^α`.
pub fn apply_lambda_power<T: Real>(t: &SpectralField<T>, s: T) -> SpectralField<T> {
    if s == T::zero() {
        return t.clone();
    }
    let half = s * T::of(0.5);
    t.map_real_multiplier(|j| T::of(j.norm_sq() as f64).powf(half))
}

/// Velocity `u = (-R₂θ, R₁θ)`, i.e. `û(j) = i (j/|j|)^⊥ θ̂(j)`.
pub fn velocity_from_theta<T: Real>(t: &SpectralField<T>) -> (SpectralField<T>, SpectralField<T>) {
    let mut u1 = t.clone();
    let mut u2 = t.clone();
    for (i, c) in t.coeffs().iter().enumerate() {
        let j = t.mode_at(i);
        if j.is_zero() {
            continue;
        }
        // i θ̂ / |j|
        let f = Complex::new(-c.im, c.re) / j.norm::<T>();
        u1.coeffs_mut()[i] = f * T::of(-j.j2 as f64);
        u2.coeffs_mut()[i] = f * T::of(j.j1 as f64);
    }
    (u1, u2)
}

/// Gradient `(∂₁θ, ∂₂θ)`, multipliers `i j₁` and `i j₂`.
pub fn gradient<T: Real>(t: &SpectralField<T>) -> (SpectralField<T>, SpectralField<T>) {
    let mut d1 = t.clone();
    let mut d2 = t.clone();
    for (i, c) in t.coeffs().iter().enumerate() {
        let j = t.mode_at(i);
        let ic = Complex::new(-c.im, c.re);
        d1.coeffs_mut()[i] = ic * T::of(j.j1 as f64);
        d2.coeffs_mut()[i] = ic * T::of(j.j2 as f64);
    }
    (d1, d2)
}

/// Convolution with the periodic Poisson kernel, symbol `e^{-δ|j|}`.
pub fn apply_poisson_mollifier<T: Real>(t: &SpectralField<T>, delta: T) -> Result<SpectralField<T>> {
    if !(delta >= T::zero()) {
        return Err(QgError::invalid("delta", format!("must be >= 0, got {delta}")));
    }
    if delta == T::zero() {
        return Ok(t.clone());
    }
    Ok(t.map_real_multiplier(|j| (-delta * j.norm::<T>()).exp()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DealiasRule {
    #[default]
    TwoThirds,
    None,
}

impl DealiasRule {
    pub fn as_str(self) -> &'static str {
        match self {
            DealiasRule::TwoThirds => "two-thirds",
            DealiasRule::None => "none",
        }
    }
}

impl fmt::Display for DealiasRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DealiasRule {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "two-thirds" => Ok(DealiasRule::TwoThirds),
            "none" => Ok(DealiasRule::None),
            other => Err(format!("unknown dealias rule `{other}` (expected two-thirds or none)")),
        }
    }
}

/// Largest `max(|j₁|, |j₂|)` a rule keeps for truncation `n_max`.
pub fn retained_radius(n_max: usize, rule: DealiasRule) -> usize {
    match rule {
        DealiasRule::TwoThirds => 2 * n_max / 3,
        DealiasRule::None => n_max,
    }
}

/// Zeroes every mode beyond the rule's retained radius.
pub fn dealias<T: Real>(t: &SpectralField<T>, rule: DealiasRule) -> SpectralField<T> {
    let keep = retained_radius(t.n_max(), rule);
    if keep >= t.n_max() {
        return t.clone();
    }
    let mut out = t.clone();
    truncate_in_place(&mut out, keep);
    out
}

pub(crate) fn truncate_in_place<T: Real>(t: &mut SpectralField<T>, keep: usize) {
    let zero = Complex::new(T::zero(), T::zero());
    let n = t.n_max();
    if keep >= n {
        return;
    }
    for i in 0..t.coeffs().len() {
        if t.mode_at(i).max_norm() as usize > keep {
            t.coeffs_mut()[i] = zero;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{inverse_transform, WaveVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wave(j1: i32, j2: i32) -> WaveVector {
        WaveVector::new(j1, j2)
    }

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn random_field(n_max: usize, seed: u64) -> SpectralField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = SpectralField::zeros(n_max);
        let n = n_max as i32;
        for j1 in 0..=n {
            for j2 in -n..=n {
                if j1 == 0 && j2 <= 0 {
                    continue;
                }
                let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                f.set_pair(WaveVector::new(j1, j2), v).unwrap();
            }
        }
        f
    }

    fn assert_close(a: &SpectralField<f64>, b: &SpectralField<f64>, rel: f64) {
        let scale = a.max_abs().max(b.max_abs()).max(1e-300);
        for ((j, x), y) in a.modes().zip(b.coeffs()) {
            assert!((x - y).norm() <= rel * scale, "{j}: {x} vs {y}");
        }
    }

    #[test]
    fn lambda_on_cos2x() {
        let mut t = SpectralField::zeros(3);
        t.set_pair(wave(2, 0), c(0.5, 0.0)).unwrap();
        let out = apply_lambda_power(&t, 1.0);
        assert_eq!(out.get(wave(2, 0)), c(1.0, 0.0));
        assert_eq!(out.get(wave(-2, 0)), c(1.0, 0.0));
        assert_eq!(apply_lambda_power(&t, 0.0), t);
    }

    #[test]
    fn lambda_inverse_round_trip() {
        let t = random_field(6, 5);
        let back = apply_lambda_power(&apply_lambda_power(&t, -2.0), 2.0);
        assert_close(&t, &back, 1e-14);
    }

    #[test]
    fn velocity_of_cos_x1() {
        let mut t = SpectralField::zeros(2);
        t.set_pair(wave(1, 0), c(0.5, 0.0)).unwrap();
        let (u1, u2) = velocity_from_theta(&t);
        assert!(u1.is_zero());
        let g = inverse_transform(&u2, 8).unwrap();
        for p in 0..8 {
            let x1 = std::f64::consts::TAU * p as f64 / 8.0;
            for q in 0..8 {
                assert!((g.get(p, q) + x1.sin()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn velocity_of_cos_x2() {
        let mut t = SpectralField::zeros(2);
        t.set_pair(wave(0, 1), c(0.5, 0.0)).unwrap();
        let (u1, u2) = velocity_from_theta(&t);
        assert!(u2.is_zero());
        let g = inverse_transform(&u1, 8).unwrap();
        for p in 0..8 {
            for q in 0..8 {
                let x2 = std::f64::consts::TAU * q as f64 / 8.0;
                assert!((g.get(p, q) - x2.sin()).abs() < 1e-15);
            }
        }
        let (z1, z2) = velocity_from_theta(&SpectralField::<f64>::zeros(3));
        assert!(z1.is_zero() && z2.is_zero());
    }

    #[test]
    fn mollifier_multipliers() {
        let mut t = SpectralField::zeros(2);
        t.set_pair(wave(0, 1), c(0.5, 0.25)).unwrap();
        assert_eq!(apply_poisson_mollifier(&t, 0.0).unwrap(), t);
        let out = apply_poisson_mollifier(&t, 1.0).unwrap();
        let e = (-1.0f64).exp();
        assert!((out.get(wave(0, 1)) - c(0.5 * e, 0.25 * e)).norm() < 1e-16);
        assert!(apply_poisson_mollifier(&t, -0.1).is_err());
    }

    #[test]
    fn mollifier_does_not_increase_l2_or_sup() {
        let t = random_field(8, 21);
        let out = apply_poisson_mollifier(&t, 0.3).unwrap();
        assert!(out.energy() <= t.energy());
        let before = inverse_transform(&t, 34).unwrap().max_abs();
        let after = inverse_transform(&out, 34).unwrap().max_abs();
        assert!(after <= before + 1e-10, "{after} > {before}");
    }

    #[test]
    fn dealias_two_thirds_boundary() {
        let mut t = SpectralField::zeros(12);
        t.set_pair(wave(9, 0), c(1.0, 0.0)).unwrap();
        t.set_pair(wave(8, 0), c(1.0, 0.0)).unwrap();
        t.set_pair(wave(3, -8), c(1.0, 0.0)).unwrap();
        let out = dealias(&t, DealiasRule::TwoThirds);
        assert_eq!(out.get(wave(9, 0)), c(0.0, 0.0));
        assert_eq!(out.get(wave(8, 0)), c(1.0, 0.0));
        assert_eq!(out.get(wave(3, -8)), c(1.0, 0.0));
        assert_eq!(dealias(&t, DealiasRule::None), t);
    }

    #[test]
    fn rule_parsing() {
        assert_eq!("two-thirds".parse::<DealiasRule>().unwrap(), DealiasRule::TwoThirds);
        assert_eq!("none".parse::<DealiasRule>().unwrap(), DealiasRule::None);
        assert!("half".parse::<DealiasRule>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn operators_preserve_symmetry(seed in any::<u64>(), s in -3.0f64..3.0, delta in 0.0f64..2.0) {
            let t = random_field(5, seed);
            let (u1, u2) = velocity_from_theta(&t);
            let (d1, d2) = gradient(&t);
            let outs = [
                apply_lambda_power(&t, s),
                apply_poisson_mollifier(&t, delta).unwrap(),
                dealias(&t, DealiasRule::TwoThirds),
                u1.clone(), u2.clone(), d1, d2,
            ];
            for o in &outs {
                prop_assert!(o.check_invariants().is_ok());
            }
            for (i, (a, b)) in u1.coeffs().iter().zip(u2.coeffs()).enumerate() {
                let j = t.mode_at(i);
                let div = a * j.j1 as f64 + b * j.j2 as f64;
                prop_assert!(div.norm() <= 1e-15 * t.max_abs());
            }
        }

        #[test]
        fn lambda_powers_compose(seed in any::<u64>(), s1 in -2.0f64..2.0, s2 in -2.0f64..2.0) {
            let t = random_field(5, seed);
            let a = apply_lambda_power(&apply_lambda_power(&t, s1), s2);
            let b = apply_lambda_power(&t, s1 + s2);
            let scale = b.max_abs();
            for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                prop_assert!((x - y).norm() <= 1e-13 * scale);
            }
        }
    }
}

//! Fourier representation of periodic fields on `[0, 2π)²` and the diagonal
//! operators acting on them.
//!
//! Coefficients follow the normalized convention
//! `f̂(k) = (2π)⁻² ∫ f(x) e^{-ik·x} dx`, so a field is recovered as
//! `f(x) = Σ_k f̂(k) e^{ik·x}` and `cos x₁` has coefficients `1/2` at `(±1, 0)`.
//! The lattice is truncated to the square `max(|j₁|, |j₂|) ≤ n_max`.

pub(crate) mod operators;
mod transform;

pub use operators::{
    apply_lambda_power, apply_poisson_mollifier, dealias, gradient, retained_radius,
    velocity_from_theta, DealiasRule,
};
pub use transform::{forward_transform, inverse_transform, smooth_size, Fft2};

use num_complex::Complex;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use crate::error::{QgError, Result};
use crate::scalar::Real;

/// Integer lattice wavevector `(j₁, j₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct WaveVector {
    pub j1: i32,
    pub j2: i32,
}

impl WaveVector {
    pub const ZERO: WaveVector = WaveVector { j1: 0, j2: 0 };

    pub const fn new(j1: i32, j2: i32) -> Self {
        WaveVector { j1, j2 }
    }

    pub fn is_zero(self) -> bool {
        self.j1 == 0 && self.j2 == 0
    }

    pub fn norm_sq(self) -> i64 {
        let (a, b) = (self.j1 as i64, self.j2 as i64);
        a * a + b * b
    }

    pub fn norm<T: Real>(self) -> T {
        T::of(self.norm_sq() as f64).sqrt()
    }

    /// `max(|j₁|, |j₂|)`, the radius used by the square truncation.
    pub fn max_norm(self) -> u32 {
        self.j1.unsigned_abs().max(self.j2.unsigned_abs())
    }

    /// `(j₁, j₂)^⊥ = (-j₂, j₁)`.
    pub fn perp(self) -> Self {
        WaveVector::new(-self.j2, self.j1)
    }

    pub fn dot(self, other: WaveVector) -> i64 {
        self.j1 as i64 * other.j1 as i64 + self.j2 as i64 * other.j2 as i64
    }
}

impl Add for WaveVector {
    type Output = WaveVector;
    fn add(self, rhs: WaveVector) -> WaveVector {
        WaveVector::new(self.j1 + rhs.j1, self.j2 + rhs.j2)
    }
}

impl Sub for WaveVector {
    type Output = WaveVector;
    fn sub(self, rhs: WaveVector) -> WaveVector {
        WaveVector::new(self.j1 - rhs.j1, self.j2 - rhs.j2)
    }
}

impl Neg for WaveVector {
    type Output = WaveVector;
    fn neg(self) -> WaveVector {
        WaveVector::new(-self.j1, -self.j2)
    }
}

impl fmt::Display for WaveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.j1, self.j2)
    }
}

/// Truncated Fourier coefficients of a real, mean-zero periodic field.
///
/// Storage is dense over the `(2 n_max + 1)²` square, ordered
/// lexicographically in `(j₁, j₂)`. The zero mode is kept at exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField<T> {
    n_max: usize,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(n_max: usize) -> Self {
        let side = 2 * n_max + 1;
        SpectralField {
            n_max,
            coeffs: vec![Complex::new(T::zero(), T::zero()); side * side],
        }
    }

    /// Builds a field by evaluating `f` on every stored mode. The zero mode is
    /// overwritten with 0; symmetry is the caller's responsibility.
    pub fn from_fn(n_max: usize, mut f: impl FnMut(WaveVector) -> Complex<T>) -> Self {
        let mut out = Self::zeros(n_max);
        let n = n_max as i32;
        let mut idx = 0;
        for j1 in -n..=n {
            for j2 in -n..=n {
                out.coeffs[idx] = f(WaveVector::new(j1, j2));
                idx += 1;
            }
        }
        out.force_zero_mean();
        out
    }

    /// Wraps a dense coefficient vector, validating length, finiteness and
    /// Hermitian symmetry.
    pub fn from_coeffs(n_max: usize, coeffs: Vec<Complex<T>>) -> Result<Self> {
        let side = 2 * n_max + 1;
        if coeffs.len() != side * side {
            return Err(QgError::Schema(format!(
                "expected {} coefficients for n_max = {n_max}, got {}",
                side * side,
                coeffs.len()
            )));
        }
        let mut out = SpectralField { n_max, coeffs };
        out.force_zero_mean();
        out.check_invariants()?;
        Ok(out)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Number of stored modes per dimension, `2 n_max + 1`.
    pub fn side(&self) -> usize {
        2 * self.n_max + 1
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    pub fn contains(&self, j: WaveVector) -> bool {
        j.max_norm() as usize <= self.n_max
    }

    #[inline]
    pub(crate) fn index(&self, j: WaveVector) -> usize {
        let n = self.n_max as i32;
        ((j.j1 + n) as usize) * self.side() + (j.j2 + n) as usize
    }

    #[inline]
    pub(crate) fn mode_at(&self, idx: usize) -> WaveVector {
        let side = self.side();
        let n = self.n_max as i32;
        WaveVector::new((idx / side) as i32 - n, (idx % side) as i32 - n)
    }

    /// Coefficient at `j`; modes outside the truncation read as zero.
    pub fn get(&self, j: WaveVector) -> Complex<T> {
        if self.contains(j) {
            self.coeffs[self.index(j)]
        } else {
            Complex::new(T::zero(), T::zero())
        }
    }

    /// Sets `θ̂(j) = c` and `θ̂(-j) = conj(c)`. For `j ≠ 0` the imaginary part
    /// of a self-conjugate assignment is impossible, so `j` must be nonzero.
    pub fn set_pair(&mut self, j: WaveVector, c: Complex<T>) -> Result<()> {
        if j.is_zero() {
            return Err(QgError::ZeroWaveVector);
        }
        if !self.contains(j) {
            return Err(QgError::ModeOutsideTruncation {
                j1: j.j1,
                j2: j.j2,
                n_max: self.n_max,
            });
        }
        let (a, b) = (self.index(j), self.index(-j));
        self.coeffs[a] = c;
        self.coeffs[b] = c.conj();
        Ok(())
    }

    /// Iterates `(j, θ̂(j))` in lexicographic order.
    pub fn modes(&self) -> impl Iterator<Item = (WaveVector, Complex<T>)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (self.mode_at(i), *c))
    }

    pub(crate) fn force_zero_mean(&mut self) {
        let z = self.index(WaveVector::ZERO);
        self.coeffs[z] = Complex::new(T::zero(), T::zero());
    }

    /// Largest `|θ̂(-j) - conj θ̂(j)|` over the truncation.
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for (i, c) in self.coeffs.iter().enumerate() {
            let mirror = self.coeffs[self.coeffs.len() - 1 - i];
            worst = worst.max((mirror - c.conj()).norm());
        }
        worst
    }

    /// Replaces every coefficient by the average of itself and its mirrored
    /// conjugate, making the symmetry exact.
    pub(crate) fn symmetrize(&mut self) {
        let len = self.coeffs.len();
        let half = T::of(0.5);
        for i in 0..len / 2 {
            let a = self.coeffs[i];
            let b = self.coeffs[len - 1 - i];
            let avg = (a + b.conj()) * half;
            self.coeffs[i] = avg;
            self.coeffs[len - 1 - i] = avg.conj();
        }
        self.force_zero_mean();
    }

    pub fn max_abs(&self) -> T {
        self.coeffs
            .iter()
            .fold(T::zero(), |acc, c| acc.max(c.norm()))
    }

    /// `Σ_j |θ̂(j)|²`, the squared spectral L² norm.
    pub fn energy(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |acc, c| acc + c.norm_sqr())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == T::zero() && c.im == T::zero())
    }

    /// Validates finiteness, zero mean and Hermitian symmetry.
    pub fn check_invariants(&self) -> Result<()> {
        if let Some((i, _)) = self
            .coeffs
            .iter()
            .enumerate()
            .find(|(_, c)| !c.re.is_finite() || !c.im.is_finite())
        {
            let j = self.mode_at(i);
            return Err(QgError::NonFinite { j1: j.j1, j2: j.j2 });
        }
        let z = self.coeffs[self.index(WaveVector::ZERO)];
        if z.re != T::zero() || z.im != T::zero() {
            return Err(QgError::invalid("zero mode", "must be exactly 0"));
        }
        let tol = T::roundoff_tol() * self.max_abs();
        let defect = self.hermitian_defect();
        if defect > tol {
            return Err(QgError::SymmetryViolation {
                defect: defect.to_f64_lossy(),
                tol: tol.to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// Multiplies every coefficient by a real, even multiplier `m(j)`.
    pub fn map_real_multiplier(&self, mut m: impl FnMut(WaveVector) -> T) -> Self {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            let j = self.mode_at(i);
            if !j.is_zero() {
                *c = *c * m(j);
            }
        }
        out
    }

    pub fn scaled(&self, a: T) -> Self {
        SpectralField {
            n_max: self.n_max,
            coeffs: self.coeffs.iter().map(|c| *c * a).collect(),
        }
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: T, other: &Self) {
        assert_eq!(self.n_max, other.n_max, "axpy on mismatched truncations");
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x = *x + *y * a;
        }
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        if self.n_max != other.n_max {
            return Err(QgError::ResolutionMismatch {
                left: self.n_max,
                right: other.n_max,
            });
        }
        Ok(SpectralField {
            n_max: self.n_max,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| *a - *b)
                .collect(),
        })
    }

    /// Copies the field into a different truncation, dropping or zero-padding
    /// modes as needed.
    pub fn resized(&self, n_max: usize) -> Self {
        let mut out = Self::zeros(n_max);
        let n = n_max.min(self.n_max) as i32;
        for j1 in -n..=n {
            for j2 in -n..=n {
                let j = WaveVector::new(j1, j2);
                let dst = out.index(j);
                out.coeffs[dst] = self.coeffs[self.index(j)];
            }
        }
        out
    }

    /// Converts every coefficient to another scalar type.
    pub fn cast<U: Real>(&self) -> SpectralField<U> {
        SpectralField {
            n_max: self.n_max,
            coeffs: self
                .coeffs
                .iter()
                .map(|c| Complex::new(U::of(c.re.to_f64_lossy()), U::of(c.im.to_f64_lossy())))
                .collect(),
        }
    }
}

/// Real samples on the uniform `m × m` grid `x = (2πp/m, 2πq/m)`, stored
/// row-major with `p` (the `x₁` index) as the slow index.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField<T> {
    m: usize,
    values: Vec<T>,
}

impl<T: Real> PhysicalField<T> {
    pub fn new(m: usize, values: Vec<T>) -> Result<Self> {
        if m == 0 || values.len() != m * m {
            return Err(QgError::invalid(
                "values",
                format!("expected {} samples for m = {m}, got {}", m * m, values.len()),
            ));
        }
        Ok(PhysicalField { m, values })
    }

    /// Samples `f(x₁, x₂)` on the grid.
    pub fn from_fn(m: usize, f: impl Fn(T, T) -> T) -> Self {
        let h = T::TAU() / T::of(m as f64);
        let mut values = Vec::with_capacity(m * m);
        for p in 0..m {
            for q in 0..m {
                values.push(f(h * T::of(p as f64), h * T::of(q as f64)));
            }
        }
        PhysicalField { m, values }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Sample at grid point `(p, q)`.
    pub fn get(&self, p: usize, q: usize) -> T {
        self.values[p * self.m + q]
    }

    pub fn mean(&self) -> T {
        let sum = self.values.iter().fold(T::zero(), |a, &v| a + v);
        sum / T::of((self.m * self.m) as f64)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |a, &v| a.max(v.abs()))
    }

    pub fn min_max(&self) -> (T, T) {
        self.values.iter().fold(
            (T::infinity(), T::neg_infinity()),
            |(lo, hi), &v| (lo.min(v), hi.max(v)),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perp_is_orthogonal() {
        for j in [WaveVector::new(3, -7), WaveVector::new(0, 1), WaveVector::new(-5, 2)] {
            assert_eq!(j.perp().dot(j), 0);
        }
        assert_eq!(WaveVector::new(1, 2).perp(), WaveVector::new(-2, 1));
    }

    #[test]
    fn zero_mode_is_forced() {
        let f = SpectralField::<f64>::from_fn(2, |_| Complex::new(1.0, 0.0));
        assert_eq!(f.get(WaveVector::ZERO), Complex::new(0.0, 0.0));
        assert_eq!(f.get(WaveVector::new(1, 1)), Complex::new(1.0, 0.0));
    }

    #[test]
    fn set_pair_keeps_symmetry() {
        let mut f = SpectralField::<f64>::zeros(3);
        f.set_pair(WaveVector::new(2, -1), Complex::new(0.3, -0.4)).unwrap();
        assert_eq!(f.get(WaveVector::new(-2, 1)), Complex::new(0.3, 0.4));
        assert_eq!(f.hermitian_defect(), 0.0);
        f.check_invariants().unwrap();
        assert!(matches!(
            f.set_pair(WaveVector::new(4, 0), Complex::new(1.0, 0.0)),
            Err(QgError::ModeOutsideTruncation { .. })
        ));
        assert!(matches!(
            f.set_pair(WaveVector::ZERO, Complex::new(1.0, 0.0)),
            Err(QgError::ZeroWaveVector)
        ));
    }

    #[test]
    fn invariant_check_rejects_bad_fields() {
        let mut f = SpectralField::<f64>::zeros(2);
        let i = f.index(WaveVector::new(1, 0));
        f.coeffs_mut()[i] = Complex::new(1.0, 0.0);
        assert!(matches!(f.check_invariants(), Err(QgError::SymmetryViolation { .. })));

        let mut g = SpectralField::<f64>::zeros(2);
        g.set_pair(WaveVector::new(1, 0), Complex::new(f64::NAN, 0.0)).unwrap();
        assert!(matches!(g.check_invariants(), Err(QgError::NonFinite { .. })));
    }

    #[test]
    fn resize_pads_and_truncates() {
        let mut f = SpectralField::<f64>::zeros(4);
        f.set_pair(WaveVector::new(4, 1), Complex::new(1.0, 0.0)).unwrap();
        f.set_pair(WaveVector::new(1, 1), Complex::new(2.0, 0.0)).unwrap();
        let small = f.resized(2);
        assert_eq!(small.get(WaveVector::new(1, 1)).re, 2.0);
        assert_eq!(small.energy(), 8.0);
        let big = small.resized(6);
        assert_eq!(big.get(WaveVector::new(-1, -1)).re, 2.0);
        assert_eq!(big.energy(), 8.0);
    }
}

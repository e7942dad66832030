use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::{PhysicalField, SpectralField, WaveVector};
use crate::error::{QgError, Result};
use crate::scalar::Real;

/// Smallest integer `≥ min` whose only prime factors are 2, 3 and 5.
pub fn smooth_size(min: usize) -> usize {
    let mut m = min.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Planned 2D complex FFT on an `m × m` grid plus the scratch it needs.
///
/// Holds mutable scratch, so each thread keeps its own instance. Methods with
/// a `radius` argument only touch modes with `max(|j₁|, |j₂|) ≤ radius`, which
/// needs `m ≥ 2·radius + 1` rather than `2·n_max + 1`.
pub struct Fft2<T: Real> {
    m: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    scratch: Vec<Complex<T>>,
    transposed: Vec<Complex<T>>,
    buffer: Vec<Complex<T>>,
}

impl<T: Real> Fft2<T> {
    pub fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let zero = Complex::new(T::zero(), T::zero());
        Fft2 {
            m,
            forward,
            inverse,
            scratch: vec![zero; scratch_len],
            transposed: vec![zero; m * m],
            buffer: vec![zero; m * m],
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Grid rows `p` (the `j₁` index) holding wavenumbers `|j₁| ≤ radius`.
    fn band_rows(&self, radius: usize) -> impl Iterator<Item = usize> + '_ {
        let m = self.m;
        (0..=radius).chain((m - radius)..m).filter(move |&p| p < m).take((2 * radius + 1).min(m))
    }

    /// Inverse transform of a buffer whose nonzero rows lie within `radius`.
    fn inverse_buffer(&mut self, radius: usize) {
        let m = self.m;
        let rows: Vec<usize> = self.band_rows(radius).collect();
        for &p in &rows {
            self.inverse.process_with_scratch(&mut self.buffer[p * m..(p + 1) * m], &mut self.scratch);
        }
        transpose(&self.buffer, &mut self.transposed, m);
        self.inverse.process_with_scratch(&mut self.transposed, &mut self.scratch);
        transpose(&self.transposed, &mut self.buffer, m);
    }

    /// Forward transform, computing only output rows within `radius`.
    fn forward_buffer(&mut self, radius: usize) {
        let m = self.m;
        self.forward.process_with_scratch(&mut self.buffer, &mut self.scratch);
        transpose(&self.buffer, &mut self.transposed, m);
        let cols: Vec<usize> = self.band_rows(radius).collect();
        for &q in &cols {
            self.forward.process_with_scratch(&mut self.transposed[q * m..(q + 1) * m], &mut self.scratch);
        }
        // Only the needed rows are copied back.
        for &p in &cols {
            for q in 0..m {
                self.buffer[p * m + q] = self.transposed[q * m + p];
            }
        }
    }

    fn scatter(&mut self, field: &SpectralField<T>, radius: usize, scale: Complex<T>, accumulate: bool) {
        let m = self.m as i32;
        if !accumulate {
            self.buffer.fill(Complex::new(T::zero(), T::zero()));
        }
        let r = radius as i32;
        for j1 in -r..=r {
            let row = j1.rem_euclid(m) as usize * self.m;
            for j2 in -r..=r {
                let c = field.coeffs[field.index(WaveVector::new(j1, j2))];
                if c.re == T::zero() && c.im == T::zero() {
                    continue;
                }
                let cell = row + j2.rem_euclid(m) as usize;
                self.buffer[cell] = self.buffer[cell] + c * scale;
            }
        }
    }

    fn check_radius(&self, n_max: usize, radius: usize) -> Result<usize> {
        let radius = radius.min(n_max);
        let required = 2 * radius + 1;
        if self.m < required {
            return Err(QgError::ResolutionTooSmall {
                m: self.m,
                n_max: radius,
                required,
            });
        }
        Ok(radius)
    }

    /// Synthesizes two real fields at once: `a` lands in `out_a`, `b` in
    /// `out_b` (either may be `None`).
    pub fn inverse_pair(
        &mut self,
        a: &SpectralField<T>,
        b: Option<&SpectralField<T>>,
        out_a: &mut [T],
        out_b: Option<&mut [T]>,
    ) -> Result<()> {
        let radius = b.map_or(a.n_max(), |b| a.n_max().max(b.n_max()));
        self.inverse_pair_within(a, b, out_a, out_b, radius)
    }

    /// [`Fft2::inverse_pair`] using only modes with `|j|_∞ ≤ radius`.
    pub fn inverse_pair_within(
        &mut self,
        a: &SpectralField<T>,
        b: Option<&SpectralField<T>>,
        out_a: &mut [T],
        out_b: Option<&mut [T]>,
        radius: usize,
    ) -> Result<()> {
        let ra = self.check_radius(a.n_max(), radius)?;
        let one = Complex::new(T::one(), T::zero());
        self.scatter(a, ra, one, false);
        let mut band = ra;
        if let Some(b) = b {
            let rb = self.check_radius(b.n_max(), radius)?;
            self.scatter(b, rb, Complex::new(T::zero(), T::one()), true);
            band = band.max(rb);
        }
        self.inverse_buffer(band);
        for (dst, src) in out_a.iter_mut().zip(&self.buffer) {
            *dst = src.re;
        }
        if let Some(out_b) = out_b {
            for (dst, src) in out_b.iter_mut().zip(&self.buffer) {
                *dst = src.im;
            }
        }
        Ok(())
    }

    /// Synthesizes a single field, returning the complex grid values.
    pub fn inverse_complex(&mut self, field: &SpectralField<T>) -> Result<&[Complex<T>]> {
        let r = self.check_radius(field.n_max(), field.n_max())?;
        self.scatter(field, r, Complex::new(T::one(), T::zero()), false);
        self.inverse_buffer(r);
        Ok(&self.buffer)
    }

    /// Analyzes real grid samples into normalized coefficients with
    /// `|j|_∞ ≤ n_max`. The result is symmetrized exactly and mean-free.
    pub fn forward_real(&mut self, values: &[T], n_max: usize) -> Result<SpectralField<T>> {
        self.forward_real_within(values, n_max, n_max)
    }

    /// [`Fft2::forward_real`] keeping only modes with `|j|_∞ ≤ radius`; the
    /// remaining coefficients of the `n_max` field are zero.
    pub fn forward_real_within(&mut self, values: &[T], n_max: usize, radius: usize) -> Result<SpectralField<T>> {
        let r = self.check_radius(n_max, radius)? as i32;
        let m = self.m;
        for (dst, &v) in self.buffer.iter_mut().zip(values) {
            *dst = Complex::new(v, T::zero());
        }
        self.forward_buffer(r as usize);
        let norm = T::one() / T::of((m * m) as f64);
        let mut out = SpectralField::zeros(n_max);
        let mi = m as i32;
        for j1 in -r..=r {
            let row = j1.rem_euclid(mi) as usize * m;
            for j2 in -r..=r {
                let idx = out.index(WaveVector::new(j1, j2));
                out.coeffs[idx] = self.buffer[row + j2.rem_euclid(mi) as usize] * norm;
            }
        }
        out.symmetrize();
        Ok(out)
    }
}

fn transpose<T: Copy>(src: &[T], dst: &mut [T], m: usize) {
    const BLOCK: usize = 32;
    for pb in (0..m).step_by(BLOCK) {
        for qb in (0..m).step_by(BLOCK) {
            for p in pb..(pb + BLOCK).min(m) {
                for q in qb..(qb + BLOCK).min(m) {
                    dst[q * m + p] = src[p * m + q];
                }
            }
        }
    }
}

/// Normalized Fourier coefficients of grid samples, truncated to `n_max`.
///
/// The zero mode is discarded (mean subtraction).
pub fn forward_transform<T: Real>(f: &PhysicalField<T>, n_max: usize) -> Result<SpectralField<T>> {
    let mut fft = Fft2::new(f.m());
    fft.forward_real(f.values(), n_max)
}

/// Evaluates `Σ_j θ̂(j) e^{ij·x}` on the `m × m` grid.
///
/// Rejects inputs whose Hermitian defect, or whose imaginary residue on the
/// grid, exceeds round-off relative to the field scale `Σ|θ̂|`.
pub fn inverse_transform<T: Real>(t: &SpectralField<T>, m: usize) -> Result<PhysicalField<T>> {
    let scale = t.coeffs().iter().fold(T::zero(), |a, c| a + c.norm());
    let tol = T::roundoff_tol() * scale;
    let defect = t.hermitian_defect();
    if defect > tol {
        return Err(QgError::SymmetryViolation {
            defect: defect.to_f64_lossy(),
            tol: tol.to_f64_lossy(),
        });
    }
    let mut fft = Fft2::new(m);
    let grid = fft.inverse_complex(t)?;
    let residue = grid.iter().fold(T::zero(), |a, c| a.max(c.im.abs()));
    if residue > tol {
        return Err(QgError::SymmetryViolation {
            defect: residue.to_f64_lossy(),
            tol: tol.to_f64_lossy(),
        });
    }
    PhysicalField::new(m, grid.iter().map(|c| c.re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(n_max: usize, seed: u64) -> SpectralField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = SpectralField::zeros(n_max);
        let n = n_max as i32;
        for j1 in 0..=n {
            for j2 in -n..=n {
                let j = WaveVector::new(j1, j2);
                if j1 == 0 && j2 <= 0 {
                    continue;
                }
                let c = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                f.set_pair(j, c).unwrap();
            }
        }
        f
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(129), 135);
        assert_eq!(smooth_size(193), 200);
        assert_eq!(smooth_size(64), 64);
        assert_eq!(smooth_size(257), 270);
        assert_eq!(smooth_size(7), 8);
    }

    #[test]
    fn cosine_has_half_coefficients() {
        let f = PhysicalField::from_fn(8, |x1: f64, _| x1.cos());
        let t = forward_transform(&f, 3).unwrap();
        for (j, c) in t.modes() {
            let expected = if j == WaveVector::new(1, 0) || j == WaveVector::new(-1, 0) {
                0.5
            } else {
                0.0
            };
            assert!((c.re - expected).abs() < 1e-15 && c.im.abs() < 1e-15, "{j}: {c}");
        }
    }

    #[test]
    fn zero_field_transforms_to_zero() {
        let f = PhysicalField::new(9, vec![0.0; 81]).unwrap();
        assert!(forward_transform(&f, 4).unwrap().is_zero());
    }

    #[test]
    fn mean_is_removed() {
        let f = PhysicalField::from_fn(8, |x1: f64, _| 3.0 + x1.cos());
        let t = forward_transform(&f, 3).unwrap();
        assert_eq!(t.get(WaveVector::ZERO), Complex::new(0.0, 0.0));
        assert!((t.get(WaveVector::new(1, 0)).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn resolution_checks() {
        let f = PhysicalField::from_fn(8, |x1: f64, _| x1.cos());
        assert!(matches!(
            forward_transform(&f, 4),
            Err(QgError::ResolutionTooSmall { required: 9, .. })
        ));
        let t = SpectralField::<f64>::zeros(4);
        assert!(inverse_transform(&t, 8).is_err());
    }

    #[test]
    fn single_modes_synthesize() {
        let mut t = SpectralField::<f64>::zeros(2);
        t.set_pair(WaveVector::new(1, 0), Complex::new(0.5, 0.0)).unwrap();
        let f = inverse_transform(&t, 8).unwrap();
        let expect = PhysicalField::from_fn(8, |x1: f64, _| x1.cos());
        for (a, b) in f.values().iter().zip(expect.values()) {
            assert!((a - b).abs() < 1e-15);
        }

        // 1/(2i) = -i/2 at (0, 1) gives sin x₂.
        let mut s = SpectralField::<f64>::zeros(2);
        s.set_pair(WaveVector::new(0, 1), Complex::new(0.0, -0.5)).unwrap();
        let g = inverse_transform(&s, 8).unwrap();
        let expect = PhysicalField::from_fn(8, |_, x2: f64| x2.sin());
        for (a, b) in g.values().iter().zip(expect.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn asymmetric_input_rejected() {
        let mut t = SpectralField::<f64>::zeros(2);
        let i = t.index(WaveVector::new(1, 1));
        t.coeffs_mut()[i] = Complex::new(1.0, 0.0);
        assert!(matches!(
            inverse_transform(&t, 8),
            Err(QgError::SymmetryViolation { .. })
        ));
    }

    #[test]
    fn round_trip_random_band_limited() {
        let t = random_field(8, 11);
        let f = inverse_transform(&t, 32).unwrap();
        let back = forward_transform(&f, 8).unwrap();
        let scale = t.max_abs();
        for (a, b) in t.coeffs().iter().zip(back.coeffs()) {
            assert!((a - b).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn hermitian_input_gives_real_output() {
        let t = random_field(6, 3);
        let mut fft = Fft2::new(16);
        let grid = fft.inverse_complex(&t).unwrap();
        let worst = grid.iter().fold(0.0f64, |a, c| a.max(c.im.abs()));
        assert!(worst < 1e-12, "imaginary residue {worst}");
    }

    #[test]
    fn parseval_on_grid() {
        let t = random_field(5, 9);
        let m = 11;
        let f = inverse_transform(&t, m).unwrap();
        let h2 = (std::f64::consts::TAU / m as f64).powi(2);
        let grid_l2 = (h2 * f.values().iter().map(|v| v * v).sum::<f64>()).sqrt();
        let spectral = std::f64::consts::TAU * t.energy().sqrt();
        assert!((grid_l2 - spectral).abs() <= 1e-12 * spectral);
    }

    #[test]
    fn packed_pair_matches_separate_inverses() {
        let a = random_field(4, 1);
        let b = random_field(4, 2);
        let mut fft = Fft2::new(12);
        let mut ga = vec![0.0; 144];
        let mut gb = vec![0.0; 144];
        fft.inverse_pair(&a, Some(&b), &mut ga, Some(&mut gb)).unwrap();
        let fa = inverse_transform(&a, 12).unwrap();
        let fb = inverse_transform(&b, 12).unwrap();
        for k in 0..144 {
            assert!((ga[k] - fa.values()[k]).abs() < 1e-13);
            assert!((gb[k] - fb.values()[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let f = PhysicalField::<f32>::from_fn(8, |x1, x2| x1.cos() + (2.0 * x2).sin());
        let t = forward_transform(&f, 3).unwrap();
        assert!((t.get(WaveVector::new(1, 0)).re - 0.5).abs() < 1e-6);
        assert!((t.get(WaveVector::new(0, 2)).im + 0.5).abs() < 1e-6);
    }
}

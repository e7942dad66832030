//! Norms and functionals tracked along trajectories.
//!
//! Sobolev norms are homogeneous, `‖θ‖_{Ḣ^s} = (Σ |j|^{2s} |θ̂(j)|²)^{1/2}`,
//! which are the quantities the energy estimates control (up to the factor
//! `(2π)²` from Parseval). L^p norms are grid quadratures on a 2× oversampled
//! grid, so `p = ∞` is the grid maximum, a lower bound of the true supremum.

use serde::{Deserialize, Serialize};

use crate::error::{QgError, Result};
use crate::scalar::Real;
use crate::spectral::{smooth_size, Fft2, PhysicalField, SpectralField};

/// Grid size used for L^p diagnostics of a field truncated at `n_max`.
pub fn oversampled_grid_size(n_max: usize) -> usize {
    2 * smooth_size(2 * n_max + 1)
}

/// `((2π/m)² Σ|f|^p)^{1/p}`, or the maximum modulus for `p = ∞`.
pub fn lp_norm<T: Real>(f: &PhysicalField<T>, p: T) -> Result<T> {
    if !(p >= T::one()) {
        return Err(QgError::invalid("p", format!("must be >= 1, got {p}")));
    }
    Ok(lp_of_samples(f.values(), f.m(), p))
}

fn lp_of_samples<T: Real>(values: &[T], m: usize, p: T) -> T {
    if p.is_infinite() {
        return values.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
    }
    let h = T::TAU() / T::of(m as f64);
    let sum = if p == T::of(2.0) {
        values.iter().fold(T::zero(), |a, &v| a + v * v)
    } else if p == T::of(4.0) {
        values.iter().fold(T::zero(), |a, &v| {
            let s = v * v;
            a + s * s
        })
    } else {
        values.iter().fold(T::zero(), |a, &v| a + v.abs().powf(p))
    };
    (h * h * sum).powf(T::one() / p)
}

/// Homogeneous Sobolev norm `(Σ |j|^{2s} |θ̂(j)|²)^{1/2}`.
pub fn sobolev_norm<T: Real>(t: &SpectralField<T>, s: T) -> Result<T> {
    if !(s >= T::zero()) {
        return Err(QgError::invalid("s", format!("must be >= 0, got {s}")));
    }
    let sum = t.modes().fold(T::zero(), |acc, (j, c)| {
        if j.is_zero() {
            acc
        } else {
            acc + T::of(j.norm_sq() as f64).powf(s) * c.norm_sqr()
        }
    });
    Ok(sum.sqrt())
}

/// `‖θ‖_w = sup_j |θ̂(j)|`.
pub fn weak_norm<T: Real>(t: &SpectralField<T>) -> T {
    t.max_abs()
}

/// `Y = Σ_j |θ̂(j)|`.
pub fn fourier_l1<T: Real>(t: &SpectralField<T>) -> T {
    t.coeffs().iter().fold(T::zero(), |a, c| a + c.norm())
}

/// Cauchy–Schwarz constant in `Y ≤ C ‖θ‖_{Ḣ²}` over the truncated lattice:
/// `C = (Σ_{0<|j|_∞≤n} |j|⁻⁴)^{1/2}`.
pub fn fourier_l1_h2_constant(n_max: usize) -> f64 {
    let n = n_max as i64;
    let mut sum = 0.0;
    for a in -n..=n {
        for b in -n..=n {
            let r2 = (a * a + b * b) as f64;
            if r2 > 0.0 {
                sum += 1.0 / (r2 * r2);
            }
        }
    }
    sum.sqrt()
}

/// Tracks the activation time `t₀` of the analyticity weight: the first
/// sampled time with `Y(t) ≤ κ/4`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GevreyMonitor<T> {
    pub kappa: T,
    pub t0: Option<T>,
}

impl<T: Real> GevreyMonitor<T> {
    pub fn new(kappa: T) -> Self {
        GevreyMonitor { kappa, t0: None }
    }

    pub fn activation_threshold(&self) -> T {
        self.kappa / T::of(4.0)
    }

    pub fn ceiling(&self) -> T {
        self.kappa / T::of(2.0)
    }

    /// Feeds one sample; returns true when this call activates the monitor.
    /// The comparison is exact, with no tolerance.
    pub fn observe(&mut self, t: T, fourier_l1: T) -> bool {
        if self.t0.is_none() && fourier_l1 <= self.activation_threshold() {
            self.t0 = Some(t);
            return true;
        }
        false
    }
}

/// `y = Σ |θ̂(j)| w_j` and `z = Σ |j| |θ̂(j)| w_j` with
/// `w_j = exp((now - t₀) κ |j| / 2)`.
pub fn gevrey_sums<T: Real>(t: &SpectralField<T>, now: T, monitor: &GevreyMonitor<T>) -> Result<(T, T)> {
    let t0 = monitor
        .t0
        .ok_or_else(|| QgError::invalid("monitor", "Gevrey monitor has not been activated"))?;
    if now < t0 {
        return Err(QgError::invalid("now", format!("{now} precedes activation time {t0}")));
    }
    let rate = (now - t0) * monitor.kappa * T::of(0.5);
    let mut y = T::zero();
    let mut z = T::zero();
    for (j, c) in t.modes() {
        let a = c.norm();
        if a == T::zero() {
            continue;
        }
        let r = j.norm::<T>();
        let wgt = (rate * r).exp();
        y = y + a * wgt;
        z = z + r * a * wgt;
    }
    Ok((y, z))
}

/// Per-sample diagnostics. `gevrey_y`/`gevrey_z` are absent before the
/// monitor activates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord<T> {
    pub t: T,
    pub l2: T,
    pub l4: T,
    pub linf: T,
    pub h1: T,
    pub h2: T,
    pub weak: T,
    pub fourier_l1: T,
    pub gevrey_y: Option<T>,
    pub gevrey_z: Option<T>,
}

impl<T: Real> DiagnosticsRecord<T> {
    /// L^p value for `p ∈ {2, 4, ∞}`.
    pub fn lp(&self, p: T) -> Option<T> {
        if p.is_infinite() {
            Some(self.linf)
        } else if p == T::of(2.0) {
            Some(self.l2)
        } else if p == T::of(4.0) {
            Some(self.l4)
        } else {
            None
        }
    }

    /// Homogeneous H^s value for `s ∈ {1, 2}`.
    pub fn sobolev(&self, s: T) -> Option<T> {
        if s == T::one() {
            Some(self.h1)
        } else if s == T::of(2.0) {
            Some(self.h2)
        } else {
            None
        }
    }
}

/// Computes [`DiagnosticsRecord`]s for one truncation, reusing the
/// oversampled synthesis grid.
pub struct DiagnosticsEngine<T: Real> {
    n_max: usize,
    fft: Fft2<T>,
    grid: Vec<T>,
}

impl<T: Real> DiagnosticsEngine<T> {
    pub fn new(n_max: usize) -> Self {
        let m = oversampled_grid_size(n_max);
        DiagnosticsEngine {
            n_max,
            fft: Fft2::new(m),
            grid: vec![T::zero(); m * m],
        }
    }

    pub fn grid_size(&self) -> usize {
        self.fft.m()
    }

    /// Grid samples of `t` on the oversampled grid.
    pub fn synthesize(&mut self, t: &SpectralField<T>) -> Result<PhysicalField<T>> {
        self.fill_grid(t)?;
        PhysicalField::new(self.fft.m(), self.grid.clone())
    }

    fn fill_grid(&mut self, t: &SpectralField<T>) -> Result<()> {
        if t.n_max() != self.n_max {
            return Err(QgError::ResolutionMismatch {
                left: t.n_max(),
                right: self.n_max,
            });
        }
        self.fft.inverse_pair(t, None, &mut self.grid, None)
    }

    /// Grid supremum of `|θ|` on the oversampled grid.
    pub fn sup_norm(&mut self, t: &SpectralField<T>) -> Result<T> {
        self.fill_grid(t)?;
        Ok(lp_of_samples(&self.grid, self.fft.m(), T::infinity()))
    }

    /// Full record at time `now`; updates `monitor` (activation) first.
    pub fn record(&mut self, now: T, t: &SpectralField<T>, monitor: &mut GevreyMonitor<T>) -> Result<DiagnosticsRecord<T>> {
        self.fill_grid(t)?;
        let m = self.fft.m();
        let y_sum = fourier_l1(t);
        monitor.observe(now, y_sum);
        let (gy, gz) = match monitor.t0 {
            Some(_) => {
                let (y, z) = gevrey_sums(t, now, monitor)?;
                (Some(y), Some(z))
            }
            None => (None, None),
        };
        Ok(DiagnosticsRecord {
            t: now,
            l2: lp_of_samples(&self.grid, m, T::of(2.0)),
            l4: lp_of_samples(&self.grid, m, T::of(4.0)),
            linf: lp_of_samples(&self.grid, m, T::infinity()),
            h1: sobolev_norm(t, T::one())?,
            h2: sobolev_norm(t, T::of(2.0))?,
            weak: weak_norm(t),
            fourier_l1: y_sum,
            gevrey_y: gy,
            gevrey_z: gz,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{inverse_transform, WaveVector};
    use num_complex::Complex;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(n_max: usize, seed: u64) -> SpectralField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = SpectralField::zeros(n_max);
        let n = n_max as i32;
        for j1 in 0..=n {
            for j2 in -n..=n {
                if j1 == 0 && j2 <= 0 {
                    continue;
                }
                let c = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                f.set_pair(WaveVector::new(j1, j2), c).unwrap();
            }
        }
        f
    }

    fn single(n: usize, j: WaveVector, a: f64) -> SpectralField<f64> {
        let mut t = SpectralField::zeros(n);
        t.set_pair(j, Complex::new(a, 0.0)).unwrap();
        t
    }

    #[test]
    fn lp_of_cosine() {
        let f = PhysicalField::from_fn(16, |x1: f64, _| x1.cos());
        assert!((lp_norm(&f, f64::INFINITY).unwrap() - 1.0).abs() < 1e-15);
        assert!((lp_norm(&f, 2.0).unwrap() - PI * 2f64.sqrt()).abs() < 1e-13);
        let z = PhysicalField::new(4, vec![0.0; 16]).unwrap();
        for p in [1.0, 2.0, 3.5, 4.0, f64::INFINITY] {
            assert_eq!(lp_norm(&z, p).unwrap(), 0.0);
        }
        assert!(lp_norm(&f, 0.5).is_err());
    }

    #[test]
    fn lp_general_exponent_matches_specialized() {
        let t = random_field(4, 8);
        let f = inverse_transform(&t, 20).unwrap();
        let l4 = lp_norm(&f, 4.0).unwrap();
        let generic = {
            let h = std::f64::consts::TAU / 20.0;
            (h * h * f.values().iter().map(|v| v.abs().powf(4.0)).sum::<f64>()).powf(0.25)
        };
        assert!((l4 - generic).abs() < 1e-13 * generic);
    }

    #[test]
    fn sobolev_examples() {
        let t = single(3, WaveVector::new(2, 0), 0.5);
        assert!((sobolev_norm(&t, 2.0).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(sobolev_norm(&SpectralField::<f64>::zeros(3), 1.0).unwrap(), 0.0);
        assert!(sobolev_norm(&t, -1.0).is_err());

        let r = random_field(5, 3);
        let f = inverse_transform(&r, 11).unwrap();
        let l2 = lp_norm(&f, 2.0).unwrap();
        assert!((sobolev_norm(&r, 0.0).unwrap() - l2 / std::f64::consts::TAU).abs() < 1e-12 * l2);
    }

    #[test]
    fn weak_norm_examples() {
        assert_eq!(weak_norm(&single(2, WaveVector::new(1, 0), 0.5)), 0.5);
        assert_eq!(weak_norm(&SpectralField::<f64>::zeros(2)), 0.0);
        let r = random_field(6, 4);
        let mut brute = 0.0f64;
        for j1 in -6..=6 {
            for j2 in -6..=6 {
                brute = brute.max(r.get(WaveVector::new(j1, j2)).norm());
            }
        }
        assert_eq!(weak_norm(&r), brute);
    }

    #[test]
    fn gevrey_examples() {
        let t = single(3, WaveVector::new(1, 0), 0.2);
        let kappa = 2.0;
        let mut mon = GevreyMonitor::new(kappa);
        assert!(gevrey_sums(&t, 0.0, &mon).is_err());
        assert!(mon.observe(1.5, fourier_l1(&t)));
        assert!(!mon.observe(2.0, 0.0));
        assert_eq!(mon.t0, Some(1.5));
        let (y, z) = gevrey_sums(&t, 1.5, &mon).unwrap();
        assert_eq!(y, fourier_l1(&t));
        assert_eq!(z, 0.4);
        let (y, _) = gevrey_sums(&t, 1.5 + 2.0 / kappa, &mon).unwrap();
        assert!((y - 2.0 * 0.2 * 1f64.exp()).abs() < 1e-15);
        assert_eq!(gevrey_sums(&SpectralField::zeros(3), 2.0, &mon).unwrap(), (0.0, 0.0));
        assert!(gevrey_sums(&t, 1.0, &mon).is_err());
    }

    #[test]
    fn activation_is_exact_at_threshold() {
        let mut mon = GevreyMonitor::new(1.0);
        assert!(!mon.observe(0.0, 0.25 + 1e-15));
        assert!(mon.observe(0.1, 0.25));
    }

    #[test]
    fn engine_matches_free_functions() {
        let t = random_field(4, 12);
        let mut eng = DiagnosticsEngine::new(4);
        assert_eq!(eng.grid_size(), 18);
        let mut mon = GevreyMonitor::new(1.0);
        let rec = eng.record(0.0, &t, &mut mon).unwrap();
        let f = inverse_transform(&t, 18).unwrap();
        assert!((rec.l2 - lp_norm(&f, 2.0).unwrap()).abs() < 1e-12 * rec.l2);
        assert!((rec.linf - lp_norm(&f, f64::INFINITY).unwrap()).abs() < 1e-12 * rec.linf);
        assert_eq!(rec.h2, sobolev_norm(&t, 2.0).unwrap());
        assert!(rec.gevrey_y.is_none());
        assert_eq!(rec.lp(4.0), Some(rec.l4));
        assert_eq!(rec.sobolev(1.0), Some(rec.h1));
        assert_eq!(rec.lp(3.0), None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn norm_inequalities(seed in any::<u64>(), n in 2usize..8) {
            let t = random_field(n, seed);
            let w = weak_norm(&t);
            let y = fourier_l1(&t);
            let modes = t.coeffs().len() as f64;
            prop_assert!(w <= y);
            prop_assert!(y <= modes.sqrt() * t.energy().sqrt() * (1.0 + 1e-12));
            let h2 = sobolev_norm(&t, 2.0).unwrap();
            prop_assert!(y <= fourier_l1_h2_constant(n) * h2 * (1.0 + 1e-12));
        }

        #[test]
        fn gevrey_weight_grows_in_time(seed in any::<u64>(), dt in 0.01f64..2.0) {
            let t = random_field(3, seed);
            let mut mon = GevreyMonitor::new(1.0);
            mon.t0 = Some(0.0);
            let (y0, z0) = gevrey_sums(&t, 0.5, &mon).unwrap();
            let (y1, z1) = gevrey_sums(&t, 0.5 + dt, &mon).unwrap();
            prop_assert!(y1 > y0 && z1 > z0);
        }
    }
}

//! Time stepping with an exact integrating factor for `κΛ^{2α}`.
//!
//! In the variable `v = e^{Lt} θ̂` the stiff linear term disappears and only
//! the quadratic term is advanced explicitly (Lawson-type Runge–Kutta). For a
//! vanishing nonlinearity a step reduces exactly to multiplication by
//! `e^{-κ|j|^{2α} dt}`.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::diagnostics::{DiagnosticsEngine, DiagnosticsRecord, GevreyMonitor};
use crate::error::{QgError, Result};
use crate::rhs::{RhsConfig, RhsEvaluator};
use crate::scalar::Real;
use crate::spectral::{dealias, SpectralField};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    IfRk4,
    IfEuler,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::IfRk4 => "if-rk4",
            Scheme::IfEuler => "if-euler",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "if-rk4" => Ok(Scheme::IfRk4),
            "if-euler" => Ok(Scheme::IfEuler),
            other => Err(format!("unknown scheme `{other}` (expected if-rk4 or if-euler)")),
        }
    }
}

/// Run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig<T> {
    pub rhs: RhsConfig<T>,
    pub n_max: usize,
    pub dt: T,
    /// Final time. `0` yields a trajectory holding only the initial sample.
    pub t_end: T,
    /// Steps between diagnostic records.
    pub sample_every: usize,
    pub scheme: Scheme,
    pub seed: u64,
    /// Steps between stored field snapshots; 0 stores none.
    pub snapshot_every: usize,
    /// Upper bound on `dt κ n_max^{2α}`.
    pub stability_guard: T,
}

impl<T: Real> Default for SimConfig<T> {
    fn default() -> Self {
        SimConfig {
            rhs: RhsConfig::default(),
            n_max: 32,
            dt: T::of(1e-2),
            t_end: T::one(),
            sample_every: 1,
            scheme: Scheme::IfRk4,
            seed: 0,
            snapshot_every: 0,
            stability_guard: T::of(40.0),
        }
    }
}

impl<T: Real> SimConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.rhs.validate()?;
        if self.n_max == 0 {
            return Err(QgError::invalid("n_max", "must be at least 1"));
        }
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(QgError::invalid("dt", format!("must be finite and > 0, got {}", self.dt)));
        }
        if !(self.t_end >= T::zero()) || !self.t_end.is_finite() {
            return Err(QgError::invalid("t_end", format!("must be finite and >= 0, got {}", self.t_end)));
        }
        if self.t_end > T::zero() && self.t_end < self.dt {
            return Err(QgError::invalid("t_end", format!("{} is shorter than dt = {}", self.t_end, self.dt)));
        }
        if self.sample_every == 0 {
            return Err(QgError::invalid("sample_every", "must be at least 1"));
        }
        let stiffness = self.dt * self.rhs.kappa * T::of(self.n_max as f64).powf(T::of(2.0) * self.rhs.alpha);
        if stiffness > self.stability_guard {
            return Err(QgError::invalid(
                "dt",
                format!(
                    "dt·κ·n_max^(2α) = {stiffness} exceeds the stability guard {}",
                    self.stability_guard
                ),
            ));
        }
        Ok(())
    }

    /// Number of steps to reach `t_end`, the last one possibly shortened.
    pub fn step_count(&self) -> usize {
        if self.t_end == T::zero() {
            return 0;
        }
        let ratio = (self.t_end / self.dt).to_f64_lossy();
        let full = (ratio + 1e-9).floor() as usize;
        if ratio - full as f64 > 1e-9 {
            full + 1
        } else {
            full
        }
    }
}

/// Multiplies every coefficient by `e^{-κ|j|^{2α} dt}`.
pub fn linear_exact_step<T: Real>(t: &SpectralField<T>, dt: T, kappa: T, alpha: T) -> SpectralField<T> {
    if dt == T::zero() || kappa == T::zero() {
        return t.clone();
    }
    t.map_real_multiplier(|j| (-kappa * T::of(j.norm_sq() as f64).powf(alpha) * dt).exp())
}

/// Reusable single-trajectory stepper.
pub struct Stepper<T: Real> {
    rhs: RhsEvaluator<T>,
    scheme: Scheme,
    cached_dt: Option<T>,
    full: Vec<T>,
    half: Vec<T>,
}

impl<T: Real> Stepper<T> {
    pub fn new(cfg: &SimConfig<T>) -> Result<Self> {
        cfg.validate()?;
        Ok(Stepper {
            rhs: RhsEvaluator::new(cfg.n_max, cfg.rhs.clone())?,
            scheme: cfg.scheme,
            cached_dt: None,
            full: Vec::new(),
            half: Vec::new(),
        })
    }

    pub fn rhs(&mut self) -> &mut RhsEvaluator<T> {
        &mut self.rhs
    }

    fn factors(&mut self, dt: T) {
        if self.cached_dt == Some(dt) {
            return;
        }
        let h = dt * T::of(0.5);
        self.full = self.rhs.rates().iter().map(|r| (-*r * dt).exp()).collect();
        self.half = self.rhs.rates().iter().map(|r| (-*r * h).exp()).collect();
        self.cached_dt = Some(dt);
    }

    /// Advances `state` by `dt`.
    pub fn step(&mut self, state: &SpectralField<T>, dt: T) -> Result<SpectralField<T>> {
        self.factors(dt);
        match self.scheme {
            Scheme::IfEuler => {
                let k1 = self.rhs.nonlinear(state)?;
                let mut out = state.clone();
                out.axpy(dt, &k1);
                scale_by(&mut out, &self.full);
                Ok(out)
            }
            Scheme::IfRk4 => self.rk4(state, dt),
        }
    }

    fn rk4(&mut self, u: &SpectralField<T>, dt: T) -> Result<SpectralField<T>> {
        let h = dt * T::of(0.5);
        let k1 = self.rhs.nonlinear(u)?;

        let mut eu_half = u.clone();
        scale_by(&mut eu_half, &self.half);

        let mut a = u.clone();
        a.axpy(h, &k1);
        scale_by(&mut a, &self.half);
        let k2 = self.rhs.nonlinear(&a)?;

        let mut b = eu_half.clone();
        b.axpy(h, &k2);
        let k3 = self.rhs.nonlinear(&b)?;

        let mut ek3 = k3.clone();
        scale_by(&mut ek3, &self.half);
        let mut c = u.clone();
        scale_by(&mut c, &self.full);
        c.axpy(dt, &ek3);
        let k4 = self.rhs.nonlinear(&c)?;

        // E u + dt/6 (E k1 + 2 E½ (k2 + k3) + k4)
        let sixth = dt / T::of(6.0);
        let two = T::of(2.0);
        let mut out = u.clone();
        let coeffs = out.coeffs_mut();
        for (i, c) in coeffs.iter_mut().enumerate() {
            let e = self.full[i];
            let eh = self.half[i];
            let incr = k1.coeffs()[i] * e + (k2.coeffs()[i] + k3.coeffs()[i]) * (two * eh) + k4.coeffs()[i];
            *c = *c * e + incr * sixth;
        }
        out.force_zero_mean();
        Ok(out)
    }
}

fn scale_by<T: Real>(f: &mut SpectralField<T>, factors: &[T]) {
    for (c, s) in f.coeffs_mut().iter_mut().zip(factors) {
        *c = *c * *s;
    }
}

/// One step of size `cfg.dt`.
pub fn step<T: Real>(t: &SpectralField<T>, cfg: &SimConfig<T>) -> Result<SpectralField<T>> {
    let out = Stepper::new(cfg)?.step(t, cfg.dt)?;
    out.check_invariants().map_err(|_| blow_up(cfg.dt.to_f64_lossy(), 1, Vec::new()))?;
    Ok(out)
}

/// Where and when a run produced a non-finite state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowUpReport {
    pub time: f64,
    pub step: usize,
    /// `(t, ‖θ‖_{L²}, ‖θ‖_{Ḣ²})` for every diagnostic sample before the failure.
    pub history: Vec<(f64, f64, f64)>,
}

fn blow_up(time: f64, step: usize, history: Vec<(f64, f64, f64)>) -> QgError {
    QgError::BlowUp(Box::new(BlowUpReport {
        time,
        step,
        history,
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample<T> {
    pub record: DiagnosticsRecord<T>,
    pub snapshot: Option<SpectralField<T>>,
}

/// Diagnostic samples of one run, first at `t = 0`, times strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub config: SimConfig<T>,
    pub samples: Vec<Sample<T>>,
    /// Activation time of the Gevrey monitor, if reached.
    pub gevrey_t0: Option<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn records(&self) -> impl Iterator<Item = &DiagnosticsRecord<T>> {
        self.samples.iter().map(|s| &s.record)
    }

    pub fn last_snapshot(&self) -> Option<(T, &SpectralField<T>)> {
        self.samples
            .iter()
            .rev()
            .find_map(|s| s.snapshot.as_ref().map(|f| (s.record.t, f)))
    }
}

/// Integrates from `initial` to `cfg.t_end`.
///
/// Under the two-thirds rule the initial field is first truncated to the
/// retained modes. A non-finite state aborts with [`QgError::BlowUp`].
pub fn run<T: Real>(initial: &SpectralField<T>, cfg: &SimConfig<T>) -> Result<Trajectory<T>> {
    run_with(initial, cfg, |_, _| {})
}

/// [`run`] with a callback invoked after every step with `(t, state)`.
pub fn run_with<T: Real>(
    initial: &SpectralField<T>,
    cfg: &SimConfig<T>,
    mut on_step: impl FnMut(T, &SpectralField<T>),
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    if initial.n_max() != cfg.n_max {
        return Err(QgError::ResolutionMismatch {
            left: initial.n_max(),
            right: cfg.n_max,
        });
    }
    initial.check_invariants()?;
    let mut stepper = Stepper::new(cfg)?;
    let mut diag = DiagnosticsEngine::new(cfg.n_max);
    let mut monitor = GevreyMonitor::new(cfg.rhs.kappa);

    let mut state = dealias(initial, cfg.rhs.dealias);
    let steps = cfg.step_count();
    let mut samples = Vec::with_capacity(steps / cfg.sample_every + 2);
    let first = diag.record(T::zero(), &state, &mut monitor)?;
    samples.push(Sample {
        record: first,
        snapshot: (cfg.snapshot_every > 0).then(|| state.clone()),
    });

    for i in 1..=steps {
        let t_prev = T::of((i - 1) as f64) * cfg.dt;
        let now = if i == steps { cfg.t_end } else { T::of(i as f64) * cfg.dt };
        state = stepper.step(&state, now - t_prev)?;
        if state.coeffs().iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            let history = samples
                .iter()
                .map(|s: &Sample<T>| (s.record.t.to_f64_lossy(), s.record.l2.to_f64_lossy(), s.record.h2.to_f64_lossy()))
                .collect();
            return Err(blow_up(now.to_f64_lossy(), i, history));
        }
        on_step(now, &state);
        let last = i == steps;
        if i % cfg.sample_every == 0 || last {
            let record = diag.record(now, &state, &mut monitor)?;
            let keep_snapshot = cfg.snapshot_every > 0 && (i % cfg.snapshot_every == 0 || last);
            samples.push(Sample {
                record,
                snapshot: keep_snapshot.then(|| state.clone()),
            });
        }
    }
    Ok(Trajectory {
        config: cfg.clone(),
        samples,
        gevrey_t0: monitor.t0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rhs::NonlinearityPath;
    use crate::spectral::{DealiasRule, WaveVector};
    use num_complex::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cos_x1(n: usize, a: f64) -> SpectralField<f64> {
        let mut t = SpectralField::zeros(n);
        t.set_pair(WaveVector::new(1, 0), Complex::new(a / 2.0, 0.0)).unwrap();
        t
    }

    fn random_field(n_max: usize, support: i32, amp: f64, seed: u64) -> SpectralField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = SpectralField::zeros(n_max);
        for j1 in 0..=support {
            for j2 in -support..=support {
                if j1 == 0 && j2 <= 0 {
                    continue;
                }
                let c = Complex::new(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp));
                f.set_pair(WaveVector::new(j1, j2), c).unwrap();
            }
        }
        f
    }

    fn max_diff(a: &SpectralField<f64>, b: &SpectralField<f64>) -> f64 {
        a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn linear_step_examples() {
        let t = cos_x1(3, 1.0);
        let out = linear_exact_step(&t, 1.0, 1.0, 0.5);
        assert!((out.get(WaveVector::new(1, 0)).re - 0.5 * (-1f64).exp()).abs() < 1e-16);
        assert_eq!(linear_exact_step(&t, 0.0, 1.0, 0.5), t);
        assert_eq!(linear_exact_step(&t, 1.0, 0.0, 0.5), t);
    }

    #[test]
    fn linear_step_semigroup() {
        let t = random_field(6, 6, 1.0, 3);
        let one = linear_exact_step(&t, 0.2, 0.7, 0.5);
        let two = linear_exact_step(&linear_exact_step(&t, 0.1, 0.7, 0.5), 0.1, 0.7, 0.5);
        assert!(max_diff(&one, &two) < 1e-15);
    }

    #[test]
    fn steady_mode_decays_exactly() {
        let cfg = SimConfig {
            n_max: 8,
            dt: 1e-3,
            t_end: 1.0,
            sample_every: 100,
            ..SimConfig::default()
        };
        let traj = run(&cos_x1(8, 1.0), &cfg).unwrap();
        let last = traj.samples.last().unwrap();
        assert_eq!(last.record.t, 1.0);
        assert!((last.record.weak - 0.5 * (-1f64).exp()).abs() < 1e-10);
        assert_eq!(traj.samples.len(), 11);
    }

    #[test]
    fn zero_time_gives_initial_sample_only() {
        let cfg = SimConfig { n_max: 4, t_end: 0.0, ..SimConfig::default() };
        let traj = run(&cos_x1(4, 1.0), &cfg).unwrap();
        assert_eq!(traj.samples.len(), 1);
        assert_eq!(traj.samples[0].record.t, 0.0);
    }

    #[test]
    fn conservative_run_keeps_energy() {
        let cfg = SimConfig {
            rhs: RhsConfig { kappa: 0.0, ..RhsConfig::default() },
            n_max: 12,
            dt: 1e-3,
            t_end: 1.0,
            sample_every: 1000,
            ..SimConfig::default()
        };
        let init = random_field(12, 6, 0.02, 8);
        let traj = run(&init, &cfg).unwrap();
        let e0 = traj.samples[0].record.l2;
        let e1 = traj.samples.last().unwrap().record.l2;
        assert!(((e1 - e0) / e0).abs() < 1e-8);
    }

    #[test]
    fn pure_dissipation_matches_composed_linear_steps() {
        // A field of modes sharing |j| has a vanishing nonlinearity.
        let mut t = SpectralField::zeros(6);
        t.set_pair(WaveVector::new(3, 4), Complex::new(0.2, 0.1)).unwrap();
        t.set_pair(WaveVector::new(5, 0), Complex::new(-0.1, 0.0)).unwrap();
        t.set_pair(WaveVector::new(0, 5), Complex::new(0.05, 0.3)).unwrap();
        let cfg = SimConfig {
            rhs: RhsConfig { dealias: DealiasRule::None, ..RhsConfig::default() },
            n_max: 6,
            dt: 0.01,
            t_end: 0.5,
            snapshot_every: 50,
            ..SimConfig::default()
        };
        let traj = run(&t, &cfg).unwrap();
        let (_, last) = traj.last_snapshot().unwrap();
        let mut expected = t.clone();
        for _ in 0..50 {
            expected = linear_exact_step(&expected, 0.01, 1.0, 0.5);
        }
        assert!(max_diff(last, &expected) <= 1e-12 * t.max_abs());
    }

    #[test]
    fn rk4_converges_at_fourth_order() {
        let init = random_field(8, 5, 0.5, 17);
        let base = SimConfig {
            rhs: RhsConfig { kappa: 0.2, ..RhsConfig::default() },
            n_max: 8,
            t_end: 0.4,
            snapshot_every: 1_000_000,
            sample_every: 1_000_000,
            ..SimConfig::default()
        };
        let final_state = |dt: f64| {
            let cfg = SimConfig { dt, ..base.clone() };
            run(&init, &cfg).unwrap().last_snapshot().unwrap().1.clone()
        };
        let reference = final_state(0.4 / 1024.0);
        let errs: Vec<f64> = [0.4 / 16.0, 0.4 / 32.0, 0.4 / 64.0]
            .iter()
            .map(|&dt| max_diff(&final_state(dt), &reference))
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 12.0 && ratio < 20.0, "error ratio {ratio} ({errs:?})");
        }
    }

    #[test]
    fn euler_is_first_order() {
        let init = random_field(6, 4, 0.5, 2);
        let base = SimConfig {
            n_max: 6,
            t_end: 0.2,
            scheme: Scheme::IfEuler,
            snapshot_every: 1_000_000,
            sample_every: 1_000_000,
            ..SimConfig::default()
        };
        let at = |dt: f64, scheme| {
            let cfg = SimConfig { dt, scheme, ..base.clone() };
            run(&init, &cfg).unwrap().last_snapshot().unwrap().1.clone()
        };
        let reference = at(0.2 / 512.0, Scheme::IfRk4);
        let e1 = max_diff(&at(0.01, Scheme::IfEuler), &reference);
        let e2 = max_diff(&at(0.005, Scheme::IfEuler), &reference);
        assert!((e1 / e2 - 2.0).abs() < 0.3, "{}", e1 / e2);
    }

    #[test]
    fn deterministic_and_mean_free() {
        let init = random_field(10, 5, 0.1, 4);
        let cfg = SimConfig { n_max: 10, t_end: 0.3, snapshot_every: 5, ..SimConfig::default() };
        let a = run(&init, &cfg).unwrap();
        let b = run(&init, &cfg).unwrap();
        assert_eq!(a, b);
        for s in &a.samples {
            if let Some(f) = &s.snapshot {
                assert_eq!(f.get(WaveVector::ZERO), Complex::new(0.0, 0.0));
                f.check_invariants().unwrap();
            }
        }
        assert!(a.samples.windows(2).all(|w| w[0].record.t < w[1].record.t));
    }

    #[test]
    fn paths_give_same_trajectory() {
        let init = random_field(6, 4, 0.3, 9);
        let mk = |path| SimConfig {
            rhs: RhsConfig { nonlinearity: path, ..RhsConfig::default() },
            n_max: 6,
            t_end: 0.2,
            snapshot_every: 20,
            ..SimConfig::default()
        };
        let a = run(&init, &mk(NonlinearityPath::Pseudospectral)).unwrap();
        let b = run(&init, &mk(NonlinearityPath::Convolution)).unwrap();
        assert!(max_diff(a.last_snapshot().unwrap().1, b.last_snapshot().unwrap().1) < 1e-14);
    }

    #[test]
    fn config_validation() {
        let ok = SimConfig::<f64>::default();
        ok.validate().unwrap();
        assert!(SimConfig { dt: 0.0, ..ok.clone() }.validate().is_err());
        assert!(SimConfig { t_end: 0.001, ..ok.clone() }.validate().is_err());
        assert!(SimConfig { sample_every: 0, ..ok.clone() }.validate().is_err());
        assert!(SimConfig { dt: 2.0, t_end: 4.0, ..ok.clone() }.validate().is_err());
        assert_eq!(SimConfig { dt: 0.3, t_end: 1.0, ..ok.clone() }.step_count(), 4);
        assert_eq!(SimConfig { dt: 0.1, t_end: 1.0, ..ok.clone() }.step_count(), 10);
    }

    #[test]
    fn blow_up_is_reported() {
        // Grossly unstable explicit step on huge data.
        let init = random_field(8, 5, 1e3, 1);
        let cfg = SimConfig {
            rhs: RhsConfig { kappa: 0.0, ..RhsConfig::default() },
            n_max: 8,
            dt: 0.05,
            t_end: 50.0,
            scheme: Scheme::IfEuler,
            sample_every: 1,
            ..SimConfig::default()
        };
        match run(&init, &cfg) {
            Err(QgError::BlowUp(report)) => {
                assert!(report.time > 0.0);
                assert!(!report.history.is_empty());
            }
            other => panic!("expected blow-up, got {:?}", other.map(|t| t.samples.len())),
        }
    }
}

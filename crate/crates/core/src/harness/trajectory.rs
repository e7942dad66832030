use super::{config_context, TheoremReport};
use crate::error::{QgError, Result};
use crate::integrator::Trajectory;
use crate::scalar::Real;

/// Relative per-sample increase allowed in monotonicity checks.
pub const MONOTONICITY_TOL: f64 = 1e-8;
/// Relative half-width around `2κ` for the small-amplitude decay rate.
pub const DECAY_RATE_MARGIN: f64 = 0.05;
/// Largest `‖θ₀‖_∞ / κ` treated as the small-amplitude regime.
pub const DECAY_SMALL_AMPLITUDE: f64 = 0.01;
/// Upper bound on `sample_every·dt·κ·n_max/2` for Gevrey checks.
pub const GEVREY_SAMPLING_LIMIT: f64 = 0.5;

/// Largest relative increase `(v[i+1] - v[i]) / v[i]` and the time at which it happens.
fn worst_increment(series: &[(f64, f64)]) -> (f64, f64) {
    let mut worst = f64::NEG_INFINITY;
    let mut at = f64::NAN;
    for w in series.windows(2) {
        let (prev, next) = (w[0].1, w[1].1);
        let inc = if prev > 0.0 {
            (next - prev) / prev
        } else if next > prev {
            f64::INFINITY
        } else {
            0.0
        };
        if inc > worst {
            worst = inc;
            at = w[1].0;
        }
    }
    (worst, at)
}

fn monotone_report(name: String, series: &[(f64, f64)], tol: f64) -> TheoremReport {
    let report = TheoremReport::new(name)
        .threshold("relative_increment_tol", tol)
        .measure("samples", series.len() as f64)
        .measure("initial", series.first().map_or(f64::NAN, |s| s.1))
        .measure("final", series.last().map_or(f64::NAN, |s| s.1));
    if series.len() < 2 {
        return report.measure("worst_relative_increment", 0.0).decide(tol);
    }
    let (worst, at) = worst_increment(series);
    report
        .measure("worst_relative_increment", worst)
        .measure("worst_increment_time", at)
        .decide(tol - worst)
}

fn series<T: Real>(traj: &Trajectory<T>, what: &str, f: impl Fn(&crate::diagnostics::DiagnosticsRecord<T>) -> Option<T>) -> Result<Vec<(f64, f64)>> {
    traj.records()
        .map(|r| {
            f(r).map(|v| (r.t.to_f64_lossy(), v.to_f64_lossy()))
                .ok_or_else(|| QgError::MissingDiagnostics(what.to_string()))
        })
        .collect()
}

fn norm_label(p: f64) -> String {
    if p.is_infinite() {
        "Linf".into()
    } else {
        format!("L{p}")
    }
}

/// Per-sample check that `‖θ(t)‖_{L^p}` never increases by more than
/// [`MONOTONICITY_TOL`] relative.
pub fn check_maximum_principle<T: Real>(traj: &Trajectory<T>, p: f64) -> Result<TheoremReport> {
    let label = norm_label(p);
    let s = series(traj, &format!("{label} norm"), |r| r.lp(T::of(p)))?;
    Ok(monotone_report(format!("maximum_principle_{label}"), &s, MONOTONICITY_TOL).with_context(config_context(&traj.config)))
}

/// Per-sample check that the homogeneous `H^s` norm (`s ∈ {1, 2}`) never
/// increases by more than [`MONOTONICITY_TOL`] relative.
pub fn check_sobolev_monotonicity<T: Real>(traj: &Trajectory<T>, s: f64) -> Result<TheoremReport> {
    if s != 1.0 && s != 2.0 {
        return Err(QgError::invalid("s", format!("Sobolev monotonicity is tracked for s = 1, 2, got {s}")));
    }
    let v = series(traj, &format!("H{s} norm"), |r| r.sobolev(T::of(s)))?;
    Ok(monotone_report(format!("sobolev_monotonicity_H{s}"), &v, MONOTONICITY_TOL).with_context(config_context(&traj.config)))
}

/// Least-squares slope of `y` against `x`.
fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Fits the decay rate of `‖θ‖²_{Ḣ²}` over the second half of the run.
///
/// For `‖θ₀‖_∞ ≤ 0.01κ` the rate must lie within 5% of `2κ`; for larger data
/// it only has to be positive.
pub fn check_exponential_decay<T: Real>(traj: &Trajectory<T>) -> Result<TheoremReport> {
    let kappa = traj.config.rhs.kappa.to_f64_lossy();
    let h2 = series(traj, "H2 norm", |r| Some(r.h2))?;
    let amplitude = traj.samples.first().map_or(0.0, |s| s.record.linf.to_f64_lossy());
    let small = amplitude <= DECAY_SMALL_AMPLITUDE * kappa * (1.0 + 1e-6);
    let report = TheoremReport::new("exponential_decay_H2")
        .measure("amplitude", amplitude)
        .threshold("required_h2_drop", std::f64::consts::E.powi(2))
        .with_context(config_context(&traj.config))
        .note("regime", if small { "small-amplitude" } else { "qualitative" });

    let (Some(&(_, first)), Some(&(t_last, last))) = (h2.first(), h2.last()) else {
        return Ok(report.inconclusive("empty trajectory"));
    };
    if !(first > 0.0) || !(last > 0.0) {
        return Ok(report.inconclusive("H2 norm vanishes, no logarithm to fit"));
    }
    let drop = first / last;
    let report = report.measure("h2_drop_factor", drop);
    if drop < std::f64::consts::E.powi(2) {
        return Ok(report.inconclusive("H2 norm dropped by less than e^2, too little decay for a stable fit"));
    }
    let window: Vec<(f64, f64)> = h2
        .iter()
        .filter(|(t, _)| *t >= 0.5 * t_last)
        .map(|&(t, v)| (t, 2.0 * v.ln()))
        .collect();
    if window.len() < 3 {
        return Ok(report.inconclusive("fewer than 3 samples in the fitting window"));
    }
    let rate = -fit_slope(&window);
    let report = report.measure("fitted_rate", rate).measure("fit_samples", window.len() as f64);
    if small {
        let target = 2.0 * kappa;
        let lo = target * (1.0 - DECAY_RATE_MARGIN);
        let hi = target * (1.0 + DECAY_RATE_MARGIN);
        Ok(report
            .threshold("rate_min", lo)
            .threshold("rate_max", hi)
            .decide((rate - lo).min(hi - rate)))
    } else {
        Ok(report.threshold("rate_min", 0.0).decide(rate))
    }
}

/// `sample_every·dt·κ·n_max/2`, the largest per-sample growth exponent of
/// the Gevrey weights.
pub fn gevrey_sampling_parameter<T: Real>(traj: &Trajectory<T>) -> f64 {
    let c = &traj.config;
    c.sample_every as f64 * c.dt.to_f64_lossy() * c.rhs.kappa.to_f64_lossy() * c.n_max as f64 / 2.0
}

/// After activation (`Y ≤ κ/4`), every sample must satisfy
/// `y(t) ≤ κ/2·(1 + 1e-8)` and `y` must be non-increasing within
/// [`MONOTONICITY_TOL`] relative.
pub fn check_gevrey<T: Real>(traj: &Trajectory<T>) -> Result<TheoremReport> {
    let sampling = gevrey_sampling_parameter(traj);
    if sampling > GEVREY_SAMPLING_LIMIT {
        return Err(QgError::invalid(
            "sample_every",
            format!("sample_every·dt·κ·n_max/2 = {sampling} exceeds {GEVREY_SAMPLING_LIMIT}; samples cannot resolve the weight growth"),
        ));
    }
    let kappa = traj.config.rhs.kappa.to_f64_lossy();
    let ceiling = kappa / 2.0;
    let report = TheoremReport::new("gevrey_monitor")
        .measure("sampling_parameter", sampling)
        .threshold("activation_threshold", kappa / 4.0)
        .threshold("ceiling", ceiling * (1.0 + MONOTONICITY_TOL))
        .threshold("relative_increment_tol", MONOTONICITY_TOL)
        .threshold("sampling_limit", GEVREY_SAMPLING_LIMIT)
        .with_context(config_context(&traj.config));
    let Some(t0) = traj.gevrey_t0 else {
        return Ok(report.inconclusive("Y never dropped to κ/4 before t_end"));
    };
    let ys = series(
        &Trajectory {
            config: traj.config.clone(),
            samples: traj
                .samples
                .iter()
                .filter(|s| s.record.t >= t0)
                .cloned()
                .collect(),
            gevrey_t0: traj.gevrey_t0,
        },
        "Gevrey sum y",
        |r| r.gevrey_y,
    )?;
    let max_y = ys.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let (worst, at) = if ys.len() >= 2 { worst_increment(&ys) } else { (0.0, f64::NAN) };
    let ceiling_slack = (ceiling * (1.0 + MONOTONICITY_TOL) - max_y) / ceiling;
    Ok(report
        .measure("t0", t0.to_f64_lossy())
        .measure("y_at_t0", ys.first().map_or(f64::NAN, |p| p.1))
        .measure("max_y", max_y)
        .measure("samples_after_activation", ys.len() as f64)
        .measure("worst_relative_increment", worst)
        .measure("worst_increment_time", at)
        .decide(ceiling_slack.min(MONOTONICITY_TOL - worst)))
}

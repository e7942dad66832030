use std::fmt;
use std::str::FromStr;

use super::inequalities::{gn_refinement_study, weak_continuity_study, EnsembleSpec};
use super::studies::{
    check_dual_formula, check_energy_identity, check_gamma_sweep, check_subcritical, estimate_smallness_constant,
    SubcriticalSpec,
};
use super::trajectory::{
    check_exponential_decay, check_gevrey, check_maximum_principle, check_sobolev_monotonicity, GEVREY_SAMPLING_LIMIT,
};
use super::TheoremReport;
use crate::error::Result;
use crate::integrator::{run, SimConfig};
use crate::io::{initial_from_spec, RunSpec};
use crate::rhs::{NonlinearityPath, RhsConfig};

/// Named groups of checks run by `qgsim check`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    /// Maximum principle, `Ḣ²`/`Ḣ¹` monotonicity, decay and Gevrey checks on
    /// the configured run.
    Critical,
    /// Coefficient identities and the conservative energy identity.
    Oracles,
    /// Interpolation and weak-continuity refinement studies.
    Inequalities,
    /// Eventual `Ḣ²` monotonicity with a half-resolution comparison run.
    Subcritical,
    /// Empirical bracket of the smallness constant for the configured family.
    Smallness,
    /// `critical`, `oracles` and `inequalities`.
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 6] = ["critical", "oracles", "inequalities", "subcritical", "smallness", "all"];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = match self {
            Suite::Critical => 0,
            Suite::Oracles => 1,
            Suite::Inequalities => 2,
            Suite::Subcritical => 3,
            Suite::Smallness => 4,
            Suite::All => 5,
        };
        f.write_str(Self::NAMES[i])
    }
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "critical" => Suite::Critical,
            "oracles" => Suite::Oracles,
            "inequalities" => Suite::Inequalities,
            "subcritical" => Suite::Subcritical,
            "smallness" => Suite::Smallness,
            "all" => Suite::All,
            other => return Err(format!("unknown suite `{other}` (expected one of {})", Self::NAMES.join(", "))),
        })
    }
}

/// Largest `sample_every ≤ requested` that keeps Gevrey samples resolved.
fn gevrey_sample_every(cfg: &SimConfig<f64>) -> usize {
    let per_step = cfg.dt * cfg.rhs.kappa * cfg.n_max as f64 / 2.0;
    if per_step <= 0.0 {
        return cfg.sample_every;
    }
    let limit = (GEVREY_SAMPLING_LIMIT / per_step).floor().max(1.0) as usize;
    cfg.sample_every.min(limit)
}

/// Resolution cap for the direct-summation run behind the Gevrey report.
pub const GEVREY_CONVOLUTION_N_MAX: usize = 32;

/// Configuration of the run the Gevrey monitor is evaluated on: the same data
/// and parameters advanced with the direct-summation nonlinearity, whose
/// rounding error at each mode scales with the local spectral amplitude.
fn gevrey_config(sim: &SimConfig<f64>) -> SimConfig<f64> {
    let cfg = SimConfig {
        n_max: sim.n_max.min(GEVREY_CONVOLUTION_N_MAX),
        rhs: RhsConfig { nonlinearity: NonlinearityPath::Convolution, ..sim.rhs.clone() },
        ..sim.clone()
    };
    SimConfig { sample_every: gevrey_sample_every(&cfg), ..cfg }
}

fn critical(spec: &RunSpec<f64>) -> Result<Vec<TheoremReport>> {
    let sim = spec.sim.clone();
    let init = initial_from_spec(&spec.initial, sim.n_max, sim.seed)?;
    let delta = if sim.rhs.delta > 0.0 { sim.rhs.delta } else { 0.1 };
    let mollified = SimConfig { rhs: RhsConfig { delta, ..sim.rhs.clone() }, ..sim.clone() };
    let gevrey_sim = gevrey_config(&sim);
    let gevrey_init = init.resized(gevrey_sim.n_max);
    let ((base, moll), gev) = rayon::join(
        || rayon::join(|| run(&init, &sim), || run(&init, &mollified)),
        || run(&gevrey_init, &gevrey_sim),
    );
    let (base, moll, gev) = (base?, moll?, gev?);
    let mut out = Vec::new();
    for p in [2.0, 4.0, f64::INFINITY] {
        out.push(check_maximum_principle(&base, p)?);
    }
    out.push(check_sobolev_monotonicity(&base, 2.0)?);
    let mut h1 = check_sobolev_monotonicity(&moll, 1.0)?;
    h1.check_name = "sobolev_monotonicity_H1_mollified".into();
    out.push(h1);
    out.push(check_exponential_decay(&base)?);
    out.push(check_gevrey(&gev)?.note("gevrey_run", format!("{} at n_max={}", gevrey_sim.rhs.nonlinearity, gevrey_sim.n_max)));
    Ok(out)
}

fn oracles(spec: &RunSpec<f64>) -> Result<Vec<TheoremReport>> {
    let conservative = SimConfig {
        rhs: RhsConfig { kappa: 0.0, ..spec.sim.rhs.clone() },
        t_end: spec.sim.t_end.min(1.0),
        ..spec.sim.clone()
    };
    let init = initial_from_spec(&spec.initial, conservative.n_max, conservative.seed)?;
    let ((dual, gamma), energy) = rayon::join(
        || rayon::join(|| check_dual_formula(8, 20, spec.sim.seed), || check_gamma_sweep(32)),
        || check_energy_identity(&init, &conservative),
    );
    Ok(vec![dual?, gamma?, energy?])
}

fn inequalities(spec: &RunSpec<f64>) -> Result<Vec<TheoremReport>> {
    let gn = EnsembleSpec { members: 100, band_lo: 1.0, band_hi: 8.0, slope: -1.0, amplitude: 1.0, seed: spec.sim.seed };
    let weak = EnsembleSpec { band_hi: 6.0, ..gn };
    let (a, b) = rayon::join(
        || gn_refinement_study(&gn, &[16, 32, 64]),
        || weak_continuity_study(&weak, &[8, 12, 16]),
    );
    Ok(vec![a?, b?])
}

fn smallness(spec: &RunSpec<f64>) -> Result<Vec<TheoremReport>> {
    let base = initial_from_spec(&crate::io::InitialSpec { amplitude: 1.0, ..spec.initial }, spec.sim.n_max, spec.sim.seed)?;
    Ok(vec![estimate_smallness_constant(&base, &spec.sim, spec.sim.rhs.kappa.max(f64::MIN_POSITIVE))?])
}

/// Runs `suite` against the configuration. Reports are ordered by check, not
/// by completion.
pub fn run_suite(suite: Suite, spec: &RunSpec<f64>) -> Result<Vec<TheoremReport>> {
    match suite {
        Suite::Critical => critical(spec),
        Suite::Oracles => oracles(spec),
        Suite::Inequalities => inequalities(spec),
        Suite::Subcritical => Ok(vec![check_subcritical(&SubcriticalSpec {
            initial: spec.initial,
            cfg: spec.sim.clone(),
            coarse_n_max: (spec.sim.n_max / 2).max(1),
        })?]),
        Suite::Smallness => smallness(spec),
        Suite::All => {
            let mut out = critical(spec)?;
            out.extend(oracles(spec)?);
            out.extend(inequalities(spec)?);
            Ok(out)
        }
    }
}

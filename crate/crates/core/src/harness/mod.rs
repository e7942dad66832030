//! Property checks on trajectories and fields, each producing a
//! [`TheoremReport`].
//!
//! Every threshold a verdict depends on is copied into
//! [`TheoremReport::thresholds`], and checks are pure functions of their
//! inputs. Ensemble studies parallelize over members and merge results by
//! member index, so reports are reproducible bit for bit.

mod inequalities;
mod studies;
mod suites;
mod trajectory;

pub use inequalities::{
    REFINEMENT_TOL, check_gn_ratios, check_weak_continuity, gn_ratios, gn_refinement_study, weak_continuity_ratio,
    weak_continuity_study, EnsembleSpec,
};
pub use studies::{
    ENERGY_DRIFT_TOL, ORACLE_TOL, ORTHOGONALITY_TOL, REFINEMENT_DISAGREEMENT_TOL,
    check_dual_formula, check_energy_identity, check_gamma_sweep, check_subcritical, estimate_smallness_constant,
    SubcriticalSpec,
};
pub use suites::{run_suite, Suite};
pub use trajectory::{
    check_exponential_decay, check_gevrey, check_maximum_principle, check_sobolev_monotonicity,
    gevrey_sampling_parameter, DECAY_RATE_MARGIN, DECAY_SMALL_AMPLITUDE, GEVREY_SAMPLING_LIMIT, MONOTONICITY_TOL,
};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

use crate::integrator::SimConfig;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub check_name: String,
    pub verdict: Verdict,
    #[serde(deserialize_with = "lenient::map")]
    pub measured: BTreeMap<String, f64>,
    #[serde(deserialize_with = "lenient::map")]
    pub thresholds: BTreeMap<String, f64>,
    /// Signed slack to the deciding threshold; negative exactly when the
    /// tolerance is exceeded. `NaN` for measurement-only reports.
    #[serde(deserialize_with = "lenient::scalar")]
    pub margin: f64,
    pub context: BTreeMap<String, String>,
}

impl TheoremReport {
    pub fn new(check_name: impl Into<String>) -> Self {
        TheoremReport {
            check_name: check_name.into(),
            verdict: Verdict::Inconclusive,
            measured: BTreeMap::new(),
            thresholds: BTreeMap::new(),
            margin: f64::NAN,
            context: BTreeMap::new(),
        }
    }

    pub fn measure(mut self, key: &str, value: f64) -> Self {
        self.measured.insert(key.to_string(), value);
        self
    }

    pub fn threshold(mut self, key: &str, value: f64) -> Self {
        self.thresholds.insert(key.to_string(), value);
        self
    }

    pub fn note(mut self, key: &str, value: impl Into<String>) -> Self {
        self.context.insert(key.to_string(), value.into());
        self
    }

    pub fn with_context(mut self, ctx: BTreeMap<String, String>) -> Self {
        self.context.extend(ctx);
        self
    }

    /// Sets `margin` and a pass/fail verdict from it.
    pub fn decide(mut self, margin: f64) -> Self {
        self.margin = margin;
        self.verdict = if margin >= 0.0 { Verdict::Pass } else { Verdict::Fail };
        self
    }

    pub fn inconclusive(mut self, reason: impl Into<String>) -> Self {
        self.verdict = Verdict::Inconclusive;
        self.context.insert("inconclusive_reason".into(), reason.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn get(&self, key: &str) -> f64 {
        self.measured.get(key).copied().unwrap_or(f64::NAN)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for TheoremReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<8} {}", self.verdict.to_string().to_uppercase(), self.check_name)?;
        if self.margin.is_finite() {
            write!(f, " (margin {:.3e})", self.margin)?;
        }
        if let Some(r) = self.context.get("inconclusive_reason") {
            write!(f, ": {r}")?;
        }
        Ok(())
    }
}

/// JSON has no non-finite numbers; they are written as `null` and read back as NaN.
mod lenient {
    use serde::{Deserialize, Deserializer};
    use std::collections::BTreeMap;

    pub fn scalar<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }

    pub fn map<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        let raw = BTreeMap::<String, Option<f64>>::deserialize(d)?;
        Ok(raw.into_iter().map(|(k, v)| (k, v.unwrap_or(f64::NAN))).collect())
    }
}

/// Serializes a list of reports as one JSON document.
pub fn reports_to_json(reports: &[TheoremReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize")
}

/// Exit status convention: success iff no report failed.
pub fn all_passed_or_inconclusive(reports: &[TheoremReport]) -> bool {
    reports.iter().all(|r| r.verdict != Verdict::Fail)
}

/// Configuration echo for report contexts.
pub fn config_context<T: Real>(cfg: &SimConfig<T>) -> BTreeMap<String, String> {
    let r = &cfg.rhs;
    BTreeMap::from([
        ("kappa".to_string(), format!("{}", r.kappa)),
        ("alpha".to_string(), format!("{}", r.alpha)),
        ("delta".to_string(), format!("{}", r.delta)),
        ("dealias".to_string(), r.dealias.to_string()),
        ("nonlinearity".to_string(), r.nonlinearity.to_string()),
        ("n_max".to_string(), cfg.n_max.to_string()),
        ("dt".to_string(), format!("{}", cfg.dt)),
        ("t_end".to_string(), format!("{}", cfg.t_end)),
        ("scheme".to_string(), cfg.scheme.to_string()),
        ("sample_every".to_string(), cfg.sample_every.to_string()),
        ("seed".to_string(), cfg.seed.to_string()),
    ])
}

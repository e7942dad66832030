//! `key=value` run configuration.
//!
//! One pair per line; `#` starts a comment; blank lines are ignored. Keys:
//!
//! | key            | default                     |
//! |----------------|-----------------------------|
//! | `kappa`        | required                    |
//! | `n_max`        | required                    |
//! | `dt`           | required                    |
//! | `t_end`        | required                    |
//! | `alpha`        | `0.5`                       |
//! | `delta`        | `0`                         |
//! | `scheme`       | `if-rk4`                    |
//! | `dealias`      | `two-thirds`                |
//! | `nonlinearity` | `pseudospectral`            |
//! | `sample_every` | `1`                         |
//! | `seed`         | `0`                         |
//! | `initial`      | `random-band(1,8,-1):0.05`  |
//! | `output_dir`   | `out`                       |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{QgError, Result};
use crate::integrator::SimConfig;
use crate::io::initial::InitialSpec;
use crate::scalar::Real;

pub const KEYS: [&str; 13] = [
    "kappa",
    "alpha",
    "n_max",
    "dt",
    "t_end",
    "delta",
    "scheme",
    "dealias",
    "nonlinearity",
    "sample_every",
    "seed",
    "initial",
    "output_dir",
];

const REQUIRED: [&str; 4] = ["kappa", "n_max", "dt", "t_end"];

/// A parsed configuration file.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec<T> {
    pub sim: SimConfig<T>,
    pub initial: InitialSpec,
    pub output_dir: PathBuf,
}

impl<T: Real> RunSpec<T> {
    /// Renders the configuration back into the file format, one key per line
    /// in the canonical order. Parsing the result yields an equal spec.
    pub fn to_config_text(&self) -> String {
        let s = &self.sim;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        put("kappa", format!("{:e}", s.rhs.kappa));
        put("alpha", format!("{:e}", s.rhs.alpha));
        put("n_max", s.n_max.to_string());
        put("dt", format!("{:e}", s.dt));
        put("t_end", format!("{:e}", s.t_end));
        put("delta", format!("{:e}", s.rhs.delta));
        put("scheme", s.scheme.to_string());
        put("dealias", s.rhs.dealias.to_string());
        put("nonlinearity", s.rhs.nonlinearity.to_string());
        put("sample_every", s.sample_every.to_string());
        put("seed", s.seed.to_string());
        put("initial", self.initial.to_string());
        put("output_dir", self.output_dir.display().to_string());
        out
    }

    /// Applies one `key=value` override, validating the result.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.assign(0, key, value)?;
        self.sim.validate().map_err(|e| config_err(0, e.to_string()))
    }

    fn assign(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        let s = &mut self.sim;
        match key {
            "kappa" => s.rhs.kappa = real(line, key, value)?,
            "alpha" => s.rhs.alpha = real(line, key, value)?,
            "delta" => s.rhs.delta = real(line, key, value)?,
            "dt" => s.dt = real(line, key, value)?,
            "t_end" => s.t_end = real(line, key, value)?,
            "n_max" => s.n_max = parsed(line, key, value)?,
            "sample_every" => s.sample_every = parsed(line, key, value)?,
            "seed" => s.seed = parsed(line, key, value)?,
            "scheme" => s.scheme = parsed(line, key, value)?,
            "dealias" => s.rhs.dealias = parsed(line, key, value)?,
            "nonlinearity" => s.rhs.nonlinearity = parsed(line, key, value)?,
            "initial" => {
                let spec: InitialSpec = parsed(line, key, value)?;
                if !(spec.amplitude > 0.0) || !spec.amplitude.is_finite() {
                    return Err(config_err(line, format!("initial: amplitude must be finite and > 0, got {}", spec.amplitude)));
                }
                self.initial = spec;
            }
            "output_dir" => {
                if value.is_empty() {
                    return Err(config_err(line, "output_dir: empty path"));
                }
                self.output_dir = PathBuf::from(value);
            }
            other => {
                return Err(config_err(line, format!("unknown key `{other}` (known keys: {})", KEYS.join(", "))));
            }
        }
        Ok(())
    }
}

fn config_err(line: usize, message: impl Into<String>) -> QgError {
    QgError::Config { line, message: message.into() }
}

fn parsed<V: FromStr>(line: usize, key: &str, value: &str) -> Result<V>
where
    V::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| config_err(line, format!("{key}: cannot parse `{value}`: {e}")))
}

fn real<T: Real>(line: usize, key: &str, value: &str) -> Result<T> {
    let v: f64 = parsed(line, key, value)?;
    if !v.is_finite() {
        return Err(config_err(line, format!("{key}: must be finite, got `{value}`")));
    }
    Ok(T::of(v))
}

fn range_message<T: Real>(spec: &RunSpec<T>) -> Option<String> {
    let s = &spec.sim;
    let r = &s.rhs;
    if !(r.alpha >= T::zero() && r.alpha <= T::one()) {
        return Some(format!("alpha: {} outside [0, 1]", r.alpha));
    }
    if r.kappa < T::zero() {
        return Some(format!("kappa: {} must be >= 0", r.kappa));
    }
    if r.delta < T::zero() {
        return Some(format!("delta: {} must be >= 0", r.delta));
    }
    if s.n_max == 0 {
        return Some("n_max: must be >= 1".into());
    }
    if s.dt <= T::zero() {
        return Some(format!("dt: {} must be > 0", s.dt));
    }
    if s.t_end < T::zero() {
        return Some(format!("t_end: {} must be >= 0", s.t_end));
    }
    if s.sample_every == 0 {
        return Some("sample_every: must be >= 1".into());
    }
    None
}

/// Parses and validates a configuration document.
pub fn parse_config<T: Real>(text: &str) -> Result<RunSpec<T>> {
    let mut spec = RunSpec {
        sim: SimConfig::default(),
        initial: InitialSpec::default(),
        output_dir: PathBuf::from("out"),
    };
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| config_err(line, format!("expected `key=value`, got `{content}`")))?;
        let key = key.trim();
        let value = value.trim();
        if let Some(first) = seen.insert(key.to_string(), line) {
            return Err(config_err(line, format!("duplicate key `{key}` (first set on line {first})")));
        }
        spec.assign(line, key, value)?;
    }
    let missing: Vec<&str> = REQUIRED.iter().copied().filter(|k| !seen.contains_key(*k)).collect();
    if !missing.is_empty() {
        return Err(config_err(0, format!("missing required key(s): {}", missing.join(", "))));
    }
    if let Some(msg) = range_message(&spec) {
        let key = msg.split(':').next().unwrap_or("");
        return Err(config_err(seen.get(key).copied().unwrap_or(0), msg));
    }
    spec.sim.validate().map_err(|e| config_err(0, e.to_string()))?;
    Ok(spec)
}

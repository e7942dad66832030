use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use qgsim::diagnostics::DiagnosticsEngine;
use qgsim::harness::{all_passed_or_inconclusive, reports_to_json, run_suite, Suite};
use qgsim::integrator::{run as integrate, BlowUpReport, Trajectory};
use qgsim::io::manifest::unix_now;
use qgsim::io::{
    initial_from_spec, parse_config, read_snapshot, write_heatmap, write_snapshot, write_timeseries, RunManifest,
    RunSpec,
};
use qgsim::{QgError, SpectralField64};

pub enum Exit {
    CheckFailed(String),
    Usage(String),
    BlowUp(String),
}

impl fmt::Display for Exit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exit::CheckFailed(m) | Exit::Usage(m) | Exit::BlowUp(m) => f.write_str(m),
        }
    }
}

impl From<QgError> for Exit {
    fn from(e: QgError) -> Self {
        match e {
            QgError::BlowUp(r) => Exit::BlowUp(format!("blow-up detected at t = {} (step {})", r.time, r.step)),
            other => Exit::Usage(other.to_string()),
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, Exit>;

fn load(config: &Path, out: Option<PathBuf>) -> CliResult<RunSpec<f64>> {
    let text = fs::read_to_string(config).map_err(|e| Exit::Usage(format!("{}: {e}", config.display())))?;
    let mut spec: RunSpec<f64> = parse_config(&text)?;
    if let Some(out) = out {
        spec.output_dir = out;
    }
    Ok(spec)
}

fn create_dir(dir: &Path) -> CliResult {
    fs::create_dir_all(dir).map_err(|e| Exit::Usage(format!("{}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| Exit::Usage(format!("{}: {e}", path.display())))
}

fn config_map(spec: &RunSpec<f64>) -> BTreeMap<String, String> {
    spec.to_config_text()
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

/// Integrates `spec` and writes its artifacts into `dir`, returning the
/// trajectory, or the blow-up report after writing `blowup.json`.
fn run_into(
    spec: &RunSpec<f64>,
    dir: &Path,
    heatmap: bool,
) -> CliResult<std::result::Result<Trajectory<f64>, BlowUpReport>> {
    create_dir(dir)?;
    let mut manifest = RunManifest::new(config_map(spec), spec.sim.seed, unix_now());
    let init: SpectralField64 = initial_from_spec(&spec.initial, spec.sim.n_max, spec.sim.seed)?;
    let traj = match integrate(&init, &spec.sim) {
        Ok(t) => t,
        Err(QgError::BlowUp(report)) => {
            let text = serde_json::to_string_pretty(&report).expect("blow-up report serializes");
            write_text(&dir.join("blowup.json"), &(text + "\n"))?;
            manifest.add_file(dir, "blowup.json")?;
            manifest.finish(dir)?;
            return Ok(Err(*report));
        }
        Err(e) => return Err(e.into()),
    };
    write_timeseries(&traj, &dir.join("timeseries.csv"))?;
    manifest.add_file(dir, "timeseries.csv")?;

    let snapshots: Vec<_> = traj.samples.iter().filter_map(|s| s.snapshot.as_ref().map(|f| (s.record.t, f))).collect();
    if !snapshots.is_empty() {
        create_dir(&dir.join("snapshots"))?;
    }
    if heatmap && !snapshots.is_empty() {
        create_dir(&dir.join("heatmaps"))?;
    }
    let mut engine = DiagnosticsEngine::new(spec.sim.n_max);
    for (i, (t, field)) in snapshots.into_iter().enumerate() {
        let rel = format!("snapshots/snapshot_{i:05}.bin");
        write_snapshot(field, t, &dir.join(&rel))?;
        manifest.add_file(dir, &rel)?;
        if heatmap {
            let rel = format!("heatmaps/theta_{i:05}.pgm");
            write_heatmap(&engine.synthesize(field)?, &dir.join(&rel))?;
            manifest.add_file(dir, &rel)?;
        }
    }
    manifest.finish(dir)?;
    Ok(Ok(traj))
}

pub fn run(config: &Path, snapshot_every: Option<usize>, heatmap: bool, out: Option<PathBuf>) -> CliResult {
    let mut spec = load(config, out)?;
    match snapshot_every {
        Some(n) => spec.sim.snapshot_every = n,
        None if heatmap => spec.sim.snapshot_every = usize::MAX,
        None => {}
    }
    let dir = spec.output_dir.clone();
    match run_into(&spec, &dir, heatmap)? {
        Ok(traj) => {
            let last = &traj.samples.last().expect("trajectory has samples").record;
            println!(
                "t = {}  L2 = {:.6e}  Linf = {:.6e}  H2 = {:.6e}  ({} samples written to {})",
                last.t,
                last.l2,
                last.linf,
                last.h2,
                traj.samples.len(),
                dir.display()
            );
            Ok(())
        }
        Err(report) => Err(Exit::BlowUp(format!(
            "blow-up detected at t = {} (step {}); report in {}",
            report.time,
            report.step,
            dir.join("blowup.json").display()
        ))),
    }
}

pub fn check(config: &Path, suite: &str, out: Option<PathBuf>) -> CliResult {
    let suite: Suite = suite.parse().map_err(Exit::Usage)?;
    let spec = load(config, out)?;
    let reports = run_suite(suite, &spec)?;
    for r in &reports {
        println!("{r}");
    }
    let dir = &spec.output_dir;
    create_dir(dir)?;
    let rel = format!("reports_{suite}.json");
    write_text(&dir.join(&rel), &(reports_to_json(&reports) + "\n"))?;
    let mut manifest = RunManifest::new(config_map(&spec), spec.sim.seed, unix_now());
    manifest.add_file(dir, &rel)?;
    manifest.finish(dir)?;
    if all_passed_or_inconclusive(&reports) {
        Ok(())
    } else {
        let failed = reports.iter().filter(|r| r.verdict == qgsim::harness::Verdict::Fail).count();
        Err(Exit::CheckFailed(format!("{failed} check(s) failed; reports in {}", dir.join(rel).display())))
    }
}

/// Filesystem-safe directory name for one sweep member.
fn member_dir(param: &str, value: &str) -> String {
    let clean: String = value
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '+') { c } else { '_' })
        .collect();
    format!("{param}={clean}")
}

fn l2_distance(a: &SpectralField64, b: &SpectralField64) -> f64 {
    let n = a.n_max().max(b.n_max());
    let d = a.resized(n).try_sub(&b.resized(n)).expect("equal resolutions");
    2.0 * std::f64::consts::PI * d.energy().sqrt()
}

struct Member {
    value: String,
    outcome: std::result::Result<(f64, f64, f64, SpectralField64), f64>,
}

/// Successive-difference order estimates: `log(d_i / d_{i+1}) / log(v_i / v_{i+1})`
/// where `d_i` is the distance between the final states of members `i` and `i+1`.
fn observed_orders(values: &[Option<f64>], diffs: &[Option<f64>]) -> Vec<Option<f64>> {
    (0..diffs.len())
        .map(|i| {
            let (d0, d1) = (diffs[i]?, *diffs.get(i + 1)?.as_ref()?);
            let (v0, v1) = (values[i]?, values[i + 1]?);
            let ratio = (v0 / v1).abs().ln();
            (d0 > 0.0 && d1 > 0.0 && ratio != 0.0).then(|| (d0 / d1).ln() / ratio)
        })
        .collect()
}

pub fn sweep(config: &Path, param: &str, values: &[String], out: Option<PathBuf>) -> CliResult {
    let base = load(config, out)?;
    if param == "output_dir" {
        return Err(Exit::Usage("output_dir cannot be swept".into()));
    }
    let root = base.output_dir.clone();
    create_dir(&root)?;
    let mut members = Vec::new();
    for value in values {
        let mut spec = base.clone();
        spec.set(param, value)?;
        spec.sim.snapshot_every = usize::MAX;
        let dir = root.join(member_dir(param, value));
        let outcome = match run_into(&spec, &dir, false)? {
            Ok(traj) => {
                let last = &traj.samples.last().expect("trajectory has samples").record;
                let (_, state) = traj.last_snapshot().expect("final state is stored");
                Ok((last.t, last.l2, last.h2, state.clone()))
            }
            Err(report) => Err(report.time),
        };
        eprintln!("{param}={value}: {}", if outcome.is_ok() { "done" } else { "blow-up" });
        members.push(Member { value: value.clone(), outcome });
    }

    let diffs: Vec<Option<f64>> = members
        .windows(2)
        .map(|w| match (&w[0].outcome, &w[1].outcome) {
            (Ok(a), Ok(b)) => Some(l2_distance(&a.3, &b.3)),
            _ => None,
        })
        .collect();
    let numeric: Vec<Option<f64>> = members.iter().map(|m| m.value.parse().ok()).collect();
    let orders = observed_orders(&numeric, &diffs);

    let cell = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.16e}"));
    let mut csv = format!("{param},status,t_final,l2,h2,l2_diff_to_next,observed_order\n");
    for (i, m) in members.iter().enumerate() {
        let (status, t, l2, h2) = match &m.outcome {
            Ok((t, l2, h2, _)) => ("ok", Some(*t), Some(*l2), Some(*h2)),
            Err(t) => ("blow-up", Some(*t), None, None),
        };
        csv += &format!(
            "{},{status},{},{},{},{},{}\n",
            m.value,
            cell(t),
            cell(l2),
            cell(h2),
            cell(diffs.get(i).copied().flatten()),
            cell(orders.get(i).copied().flatten())
        );
    }
    write_text(&root.join("sweep.csv"), &csv)?;
    let mut manifest = RunManifest::new(config_map(&base), base.sim.seed, unix_now());
    manifest.add_file(&root, "sweep.csv")?;
    manifest.finish(&root)?;
    print!("{csv}");
    match members.iter().find_map(|m| m.outcome.as_ref().err()) {
        Some(t) => Err(Exit::BlowUp(format!("at least one sweep member blew up (first at t = {t})"))),
        None => Ok(()),
    }
}

/// Mean `|θ̂(j)|` over the shells `round(|j|) = s`, `s ≥ 1`.
pub fn shell_spectrum(field: &SpectralField64) -> Vec<(usize, usize, f64)> {
    let shells = (field.n_max() as f64 * std::f64::consts::SQRT_2).round() as usize + 1;
    let mut sum = vec![0.0f64; shells];
    let mut count = vec![0usize; shells];
    for (j, c) in field.modes() {
        if j.is_zero() {
            continue;
        }
        let s = j.norm::<f64>().round() as usize;
        sum[s] += c.norm();
        count[s] += 1;
    }
    (1..shells).filter(|&s| count[s] > 0).map(|s| (s, count[s], sum[s] / count[s] as f64)).collect()
}

pub fn spectrum(snapshot: &Path) -> CliResult {
    let (field, t) = read_snapshot(snapshot)?;
    println!("# t = {t:e}");
    println!("shell,modes,mean_abs");
    for (s, n, mean) in shell_spectrum(&field) {
        println!("{s},{n},{mean:.16e}");
    }
    Ok(())
}

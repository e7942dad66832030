use std::fmt::Write as _;
use std::path::Path;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{QgError, Result};
use crate::integrator::Trajectory;
use crate::scalar::Real;

pub const TIMESERIES_HEADER: &str = "t,l2,l4,linf,h1,h2,weak,Y,gevrey_y,gevrey_z";

/// CSV rendering of diagnostic records, 17 significant digits per value;
/// Gevrey cells are empty until the monitor activates.
pub fn timeseries_csv<'a, T: Real>(records: impl IntoIterator<Item = &'a DiagnosticsRecord<T>>) -> String {
    let mut out = String::with_capacity(4096);
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for r in records {
        for v in [r.t, r.l2, r.l4, r.linf, r.h1, r.h2, r.weak, r.fourier_l1] {
            let _ = write!(out, "{v:.16e},");
        }
        if let Some(y) = r.gevrey_y {
            let _ = write!(out, "{y:.16e}");
        }
        out.push(',');
        if let Some(z) = r.gevrey_z {
            let _ = write!(out, "{z:.16e}");
        }
        out.push('\n');
    }
    out
}

pub fn write_timeseries<T: Real>(traj: &Trajectory<T>, path: &Path) -> Result<()> {
    std::fs::write(path, timeseries_csv(traj.records())).map_err(|e| QgError::io(path, e))
}

/// Parses a file produced by [`write_timeseries`].
pub fn read_timeseries(path: &Path) -> Result<Vec<DiagnosticsRecord<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| QgError::io(path, e))?;
    parse_timeseries(&text)
}

pub fn parse_timeseries(text: &str) -> Result<Vec<DiagnosticsRecord<f64>>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TIMESERIES_HEADER => {}
        other => return Err(QgError::Schema(format!("unexpected time series header {other:?}"))),
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 10 {
            return Err(QgError::Schema(format!("row {}: expected 10 cells, found {}", n + 1, cells.len())));
        }
        let num = |i: usize| -> Result<f64> {
            cells[i]
                .parse()
                .map_err(|e| QgError::Schema(format!("row {}, column {}: {e}", n + 1, i + 1)))
        };
        let opt = |i: usize| -> Result<Option<f64>> {
            if cells[i].is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        out.push(DiagnosticsRecord {
            t: num(0)?,
            l2: num(1)?,
            l4: num(2)?,
            linf: num(3)?,
            h1: num(4)?,
            h2: num(5)?,
            weak: num(6)?,
            fourier_l1: num(7)?,
            gevrey_y: opt(8)?,
            gevrey_z: opt(9)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64, g: Option<f64>) -> DiagnosticsRecord<f64> {
        DiagnosticsRecord {
            t,
            l2: 1.0 / 3.0,
            l4: std::f64::consts::PI,
            linf: 1e-300,
            h1: 2.0f64.sqrt(),
            h2: 123456.789,
            weak: 0.1,
            fourier_l1: 7.0,
            gevrey_y: g,
            gevrey_z: g.map(|v| v * 3.0),
        }
    }

    #[test]
    fn three_samples_give_four_lines_and_empty_cells() {
        let recs = [rec(0.0, None), rec(0.1, None), rec(0.2, Some(0.123))];
        let csv = timeseries_csv(recs.iter());
        assert_eq!(csv.lines().count(), 4);
        let row1 = csv.lines().nth(1).unwrap();
        assert!(row1.ends_with(",,"), "{row1}");
        assert!(!csv.lines().nth(3).unwrap().ends_with(','));
    }

    #[test]
    fn values_round_trip_exactly() {
        let recs = vec![rec(0.0, None), rec(0.1 + 0.2, Some(1.0 / 7.0))];
        let back = parse_timeseries(&timeseries_csv(recs.iter())).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn bad_header_or_row_rejected() {
        assert!(parse_timeseries("t,l2\n").is_err());
        assert!(parse_timeseries(&format!("{TIMESERIES_HEADER}\n1,2,3\n")).is_err());
    }
}

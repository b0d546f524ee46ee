//! Report rendering: aligned text tables, JSON, 16-bit PGM occupancy
//! maps, and the per-run manifest written next to every output.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use bgac_core::eval::{OccupancyMap, ScoreReport};

use crate::pipeline::CompareReport;

pub fn score_table(report: &ScoreReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<20} {:>6} {:>6} {:>6} {:>8}\n",
        "gesture", "TP", "FP", "FN", "TP rate"
    ));
    for g in &report.per_gesture {
        out.push_str(&format!(
            "{:<20} {:>6} {:>6} {:>6} {:>8.3}\n",
            g.gesture_name, g.tp, g.fp, g.fn_, g.tp_rate
        ));
    }
    out.push_str(&format!(
        "{:<20} {:>6} {:>6} {:>6} {:>8.3}\n",
        "total", report.total_tp, report.total_fp, report.total_fn, report.tp_rate
    ));
    match report.fp_interval_s {
        Some(s) if s.is_finite() => {
            out.push_str(&format!("fp interval (total time): {s:.1} s per FP\n"))
        }
        Some(_) => out.push_str("fp interval (total time): none\n"),
        None => {}
    }
    match report.fp_interval_tracked_s {
        Some(s) if s.is_finite() => {
            out.push_str(&format!("fp interval (tracked time): {s:.1} s per FP\n"))
        }
        Some(_) => out.push_str("fp interval (tracked time): none\n"),
        None => {}
    }
    out
}

pub fn compare_table(report: &CompareReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<20} {:>8} {:>8} {:>8}\n",
        "gesture", "FP (a)", "FP (b)", "a/b"
    ));
    for g in &report.per_gesture {
        let ratio = if g.ratio.is_finite() {
            format!("{:.2}", g.ratio)
        } else {
            String::from("inf")
        };
        out.push_str(&format!(
            "{:<20} {:>8} {:>8} {:>8}\n",
            g.gesture_name, g.fp_a, g.fp_b, ratio
        ));
    }
    let total_ratio = if report.total_ratio.is_finite() {
        format!("{:.2}", report.total_ratio)
    } else {
        String::from("inf")
    };
    out.push_str(&format!(
        "{:<20} {:>8} {:>8} {:>8}\n",
        "total", report.total_a, report.total_b, total_ratio
    ));
    out
}

/// Write an occupancy map as 16-bit big-endian binary PGM (P5), values
/// scaled from [0,1] to [0,65535].
pub fn write_pgm(path: &Path, map: &OccupancyMap) -> anyhow::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(f, "P5\n{} {}\n65535\n", map.width, map.height)?;
    for &v in &map.values {
        let scaled = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        f.write_all(&scaled.to_be_bytes())?;
    }
    f.flush()?;
    Ok(())
}

/// Written alongside every subcommand output for reproducibility.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub config_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub toolkit_version: &'static str,
    pub wall_clock_ms: u128,
}

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            config_path: None,
            seed: None,
            toolkit_version: TOOLKIT_VERSION,
            wall_clock_ms: 0,
        }
    }

    pub fn write(mut self, dir: &Path, elapsed: Duration) -> anyhow::Result<()> {
        self.wall_clock_ms = elapsed.as_millis();
        let path = dir.join(format!("{}.manifest.json", self.subcommand));
        std::fs::write(&path, serde_json::to_string_pretty(&self)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bgac_core::eval::GestureScore;

    #[test]
    fn score_table_lists_every_gesture() {
        let report = ScoreReport {
            per_gesture: vec![GestureScore {
                gesture_name: String::from("Swipe"),
                tp: 4,
                fp: 2,
                fn_: 1,
                tp_rate: 0.8,
            }],
            total_tp: 4,
            total_fp: 2,
            total_fn: 1,
            tp_rate: 0.8,
            fp_interval_s: Some(42.0),
            fp_interval_tracked_s: Some(f64::INFINITY),
        };
        let table = score_table(&report);
        assert!(table.contains("Swipe"));
        assert!(table.contains("42.0 s per FP"));
        assert!(table.contains("tracked time): none"));
    }

    #[test]
    fn pgm_has_header_and_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.pgm");
        let map = OccupancyMap {
            width: 3,
            height: 2,
            values: vec![0.0, 0.5, 1.0, 0.25, 0.75, 1.0],
        };
        write_pgm(&path, &map).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5\n3 2\n65535\n"));
        assert_eq!(bytes.len(), b"P5\n3 2\n65535\n".len() + 12);
        // Max value scales to 0xFFFF.
        assert_eq!(&bytes[bytes.len() - 2..], &[0xFF, 0xFF]);
    }

    #[test]
    fn manifest_written_next_to_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::new("synth");
        m.seed = Some(9);
        m.outputs.push(dir.path().join("session.bgac"));
        m.write(dir.path(), Duration::from_millis(12)).unwrap();
        let text = std::fs::read_to_string(dir.path().join("synth.manifest.json")).unwrap();
        assert!(text.contains("\"seed\": 9"));
    }
}

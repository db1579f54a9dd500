use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::collectives::Mode;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub experiment_id: String,
    pub metric: String,
    /// Missing when the experiment failed to run; see `note`.
    pub predicted: Option<f64>,
    pub golden: f64,
    pub rel_error: Option<f64>,
    pub tolerance: f64,
    pub required: bool,
    pub pass: bool,
    pub provenance: String,
    pub note: String,
}

impl ReportRow {
    pub fn compare(
        experiment_id: &str,
        metric: &str,
        predicted: f64,
        golden: f64,
        tolerance: f64,
        required: bool,
        provenance: &str,
    ) -> Self {
        let rel = rel_error(predicted, golden);
        ReportRow {
            experiment_id: experiment_id.into(),
            metric: metric.into(),
            predicted: Some(predicted),
            golden,
            rel_error: Some(rel),
            tolerance,
            required,
            pass: rel.abs() <= tolerance,
            provenance: provenance.into(),
            note: String::new(),
        }
    }

    pub fn failed(
        experiment_id: &str,
        metric: &str,
        golden: f64,
        tolerance: f64,
        required: bool,
        provenance: &str,
        note: String,
    ) -> Self {
        ReportRow {
            experiment_id: experiment_id.into(),
            metric: metric.into(),
            predicted: None,
            golden,
            rel_error: None,
            tolerance,
            required,
            pass: false,
            provenance: provenance.into(),
            note,
        }
    }
}

/// Relative deviation from the golden value; absolute when the golden
/// value is zero.
pub fn rel_error(predicted: f64, golden: f64) -> f64 {
    if golden == 0.0 {
        predicted - golden
    } else {
        (predicted - golden) / golden
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub seed: u64,
    pub mode: Mode,
    pub rows: Vec<ReportRow>,
}

impl BenchmarkReport {
    /// True when every required row passes.
    pub fn passed(&self) -> bool {
        self.rows.iter().filter(|r| r.required).all(|r| r.pass)
    }

    pub fn counts(&self) -> (usize, usize, usize, usize) {
        let req = self.rows.iter().filter(|r| r.required);
        let (mut rp, mut rt) = (0, 0);
        for r in req {
            rt += 1;
            rp += usize::from(r.pass);
        }
        let all_pass = self.rows.iter().filter(|r| r.pass).count();
        (rp, rt, all_pass, self.rows.len())
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.required && !r.pass)
    }

    fn mode_name(&self) -> &'static str {
        match self.mode {
            Mode::Analytic => "analytic",
            Mode::Empirical => "empirical",
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "experiment_id",
            "metric",
            "predicted",
            "golden",
            "rel_error",
            "tolerance",
            "required",
            "pass",
            "provenance",
            "note",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.experiment_id.clone(),
                r.metric.clone(),
                opt(r.predicted),
                r.golden.to_string(),
                opt(r.rel_error),
                r.tolerance.to_string(),
                r.required.to_string(),
                r.pass.to_string(),
                r.provenance.clone(),
                r.note.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Human-readable table with a seed and mode header.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# mode={} seed={}", self.mode_name(), self.seed);
        let _ = writeln!(
            s,
            "{:<34} {:<16} {:>14} {:>14} {:>9} {:>7}  {}",
            "experiment", "metric", "predicted", "golden", "error", "tol", "result"
        );
        for r in &self.rows {
            let verdict = match (r.pass, r.required) {
                (true, _) => "pass",
                (false, true) => "FAIL",
                (false, false) => "off",
            };
            let _ = writeln!(
                s,
                "{:<34} {:<16} {:>14} {:>14} {:>8} {:>7}  {}{}",
                r.experiment_id,
                r.metric,
                r.predicted.map_or("-".into(), fmt_value),
                fmt_value(r.golden),
                r.rel_error
                    .map_or("-".into(), |e| format!("{:+.2}%", 100.0 * e)),
                fmt_tolerance(r.tolerance),
                verdict,
                if r.required { "" } else { " (info)" },
            );
            if !r.note.is_empty() {
                let _ = writeln!(s, "    {}", r.note);
            }
        }
        let (rp, rt, ap, at) = self.counts();
        let _ = writeln!(
            s,
            "required {rp}/{rt} pass, all rows {ap}/{at} pass: {}",
            if self.passed() { "PASS" } else { "FAIL" }
        );
        s
    }
}

fn fmt_tolerance(t: f64) -> String {
    if t != 0.0 && t < 1e-3 {
        format!("{t:.0e}")
    } else {
        format!("{t:.3}")
    }
}

fn fmt_value(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e6).contains(&a) {
        format!("{v:.4e}")
    } else {
        format!("{v:.4}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> BenchmarkReport {
        BenchmarkReport {
            seed: 1,
            mode: Mode::Analytic,
            rows: vec![
                ReportRow::compare("x", "latency_ns", 105.0, 100.0, 0.1, true, "t"),
                ReportRow::compare("y", "latency_ns", 150.0, 100.0, 0.1, false, "t"),
            ],
        }
    }

    #[test]
    fn pass_follows_required_rows() {
        let mut r = report();
        assert!(r.passed());
        assert!((r.rows[0].rel_error.unwrap() - 0.05).abs() < 1e-12);
        r.rows[1].required = true;
        assert!(!r.passed());
        assert_eq!(r.failures().count(), 1);
    }

    #[test]
    fn outputs() {
        let r = report();
        let csv = r.to_csv();
        assert!(csv.starts_with("experiment_id,metric,predicted"));
        assert_eq!(csv.lines().count(), 3);
        let text = r.to_text();
        assert!(text.starts_with("# mode=analytic seed=1"));
        assert!(text.contains("required 1/1 pass"));
    }

    #[test]
    fn zero_golden() {
        assert_eq!(rel_error(0.5, 0.0), 0.5);
    }
}

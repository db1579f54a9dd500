use std::path::Path;

use crate::cost_model::{calibrate_hop_line, CostParams, HopFit};
use crate::error::{Error, Result};

use super::golden::{load_hop_samples, HopSample};

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOutcome {
    pub fit: HopFit,
    pub samples: Vec<HopSample>,
    /// Previous per-hop cost, ns.
    pub previous_per_hop_ns: f64,
    /// The cost file with the fitted per-hop cost, comments preserved.
    pub costs_toml: String,
}

impl CalibrationOutcome {
    pub fn diagnostics(&self) -> String {
        let mut s = format!(
            "per-hop latency {:.3} ns (was {:.3}), base {:.3} ns, {} samples\n",
            self.fit.per_hop_ns,
            self.previous_per_hop_ns,
            self.fit.base_ns,
            self.samples.len()
        );
        for (smp, r) in self.samples.iter().zip(&self.fit.residuals) {
            s.push_str(&format!(
                "  dnc {:>2} -> {:>2}  hops {}  observed {:>8.1} ns  residual {:+8.2} ns\n",
                smp.src_dnc, smp.dst_dnc, smp.hops, smp.latency_ns, r
            ));
        }
        s
    }
}

/// Fits the per-hop cost to the golden inter-processor latency matrix in
/// `golden_dir` and rewrites it into `base_costs`.
pub fn calibrate_costs(golden_dir: &Path, base_costs: &str) -> Result<CalibrationOutcome> {
    let samples = load_hop_samples(&golden_dir.join("ipu_latency.csv"))?;
    let pairs: Vec<(usize, f64)> = samples.iter().map(|s| (s.hops, s.latency_ns)).collect();
    let fit = calibrate_hop_line(&pairs)?;
    let previous = CostParams::from_toml_str(base_costs)?
        .costs
        .per_hop_latency_ns;

    let mut doc: toml_edit::DocumentMut = base_costs
        .parse()
        .map_err(|e| Error::Config(format!("cost params: {e}")))?;
    let costs = doc
        .get_mut("costs")
        .and_then(|c| c.as_table_like_mut())
        .ok_or_else(|| Error::Config("cost params have no [costs] table".into()))?;
    let entry = costs
        .get_mut("per_hop_latency_ns")
        .ok_or_else(|| Error::Config("[costs] has no per_hop_latency_ns".into()))?;
    let decor = entry.as_value().map(|v| v.decor().clone());
    let mut v = toml_edit::Value::from(fit.per_hop_ns);
    if let Some(d) = decor {
        *v.decor_mut() = d;
    }
    *entry = toml_edit::Item::Value(v);
    let costs_toml = doc.to_string();
    // the result must still load
    CostParams::from_toml_str(&costs_toml)?;
    Ok(CalibrationOutcome {
        fit,
        samples,
        previous_per_hop_ns: previous,
        costs_toml,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::golden::{reference_dir, HOP_HEADER};

    #[test]
    fn reference_fit_in_range() {
        let out = calibrate_costs(&reference_dir(), crate::REFERENCE_COSTS).unwrap();
        let h = out.fit.per_hop_ns;
        assert!((145.0..=174.0).contains(&h), "{h}");
        let p = CostParams::from_toml_str(&out.costs_toml).unwrap();
        assert_eq!(p.costs.per_hop_latency_ns, h);
        // untouched lines survive
        assert!(out.costs_toml.contains("# 8 KiB blocks reach 95% of peak"));
        assert!(out.diagnostics().contains("residual"));
    }

    #[test]
    fn single_hop_class_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!("{}\n0,1,1,633,x\n0,2,1,524,x\n", HOP_HEADER.join(","));
        std::fs::write(dir.path().join("ipu_latency.csv"), body).unwrap();
        assert!(matches!(
            calibrate_costs(dir.path(), crate::REFERENCE_COSTS),
            Err(Error::DegenerateFit(_))
        ));
    }
}

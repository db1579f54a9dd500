//! Benchmark harness: named experiments checked against golden data.

mod calibrate;
mod experiments;
mod golden;
mod report;
mod svg;
mod sweep;

pub use calibrate::{calibrate_costs, CalibrationOutcome};
pub use experiments::{
    collective_spec, find, p2p_messages, processors_of, registry, run_experiment, Experiment,
    HostDest, MessageSize, Metrics, P2pPattern, ReduceTiles, RunContext, Scenario, TimingScope,
    ON_CHIP_SUBSETS, SYSTEM_LABELS,
};
pub use golden::{
    family_of, reference_dir, series_key_parts, GoldenSet, GoldenValue, HopSample, ScalarRow,
    SeriesRow,
};
pub use report::{rel_error, BenchmarkReport, ReportRow};
pub use svg::line_chart;
pub use sweep::{sweep, Axis, Curve};

use crate::collectives::{EmpiricalTable, Mode, SeriesKey};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub filter: Option<glob::Pattern>,
    pub mode: Option<Mode>,
    /// Replaces every experiment's tolerance.
    pub tolerance: Option<f64>,
}

impl VerifyOptions {
    pub fn with_filter(mut self, pattern: &str) -> Result<Self> {
        let p = glob::Pattern::new(pattern)
            .map_err(|e| Error::InvalidArgument(format!("filter {pattern:?}: {e}")))?;
        self.filter = Some(p);
        Ok(self)
    }
}

/// Empirical prediction: the golden table queried at the experiment's own
/// placement. Collective rows go through the placement classifier; the
/// rest look up their series directly.
fn empirical_metrics(
    exp: &Experiment,
    ctx: &RunContext<'_>,
    golden: &GoldenSet,
    table: &EmpiricalTable,
) -> Result<Metrics> {
    if let Scenario::Collective { op, label, size } = &exp.scenario {
        let spec = collective_spec(ctx.topology, ctx.params, *op, label, *size)?
            .with_mode(Mode::Empirical);
        let r = table.predict(&spec, ctx.topology)?;
        return Ok(Metrics::from([
            ("latency_ns".into(), r.total_latency.as_ns()),
            ("aggregate_bw".into(), r.aggregate_bw),
            ("per_transfer_bw".into(), r.per_transfer_bw),
        ]));
    }
    let mut m = Metrics::new();
    if let Some(row) = golden.series_row(&exp.id) {
        let (op, family, bytes) = series_key_parts(row);
        for metric in ["latency_ns", "aggregate_bw", "per_transfer_bw"] {
            let key = SeriesKey::new(&op, metric, &family, bytes);
            if table.series(&key).is_some() {
                m.insert(metric.into(), table.lookup(&key, row.participants)?.value);
            }
        }
    }
    for s in golden.scalars.iter().filter(|s| s.experiment_id == exp.id) {
        let key = SeriesKey::new(&s.experiment_id, &s.metric, "", 0);
        m.insert(s.metric.clone(), table.lookup(&key, 1)?.value);
    }
    Ok(m)
}

/// Runs the selected experiments and compares them with the golden set.
/// Every golden value gets a row; experiments that fail to run produce
/// failing rows carrying the error.
pub fn verify(
    ctx: &RunContext<'_>,
    golden: &GoldenSet,
    opts: &VerifyOptions,
) -> Result<BenchmarkReport> {
    let mode = opts.mode.unwrap_or(Mode::Analytic);
    let table = match mode {
        Mode::Empirical => Some(golden.empirical_table()?),
        Mode::Analytic => None,
    };
    let by_id = golden.by_experiment();
    let mut rows = Vec::new();
    for exp in registry() {
        if opts.filter.as_ref().is_some_and(|f| !f.matches(&exp.id)) {
            continue;
        }
        let Some(values) = by_id.get(&exp.id) else {
            continue;
        };
        let (tolerance, required) = match mode {
            Mode::Analytic => (opts.tolerance.unwrap_or(exp.tolerance), exp.required),
            Mode::Empirical => (opts.tolerance.unwrap_or(0.0), true),
        };
        let ctx = RunContext {
            golden: Some(golden),
            ..*ctx
        };
        let predicted = match &table {
            Some(t) => empirical_metrics(&exp, &ctx, golden, t),
            None => run_experiment(&exp, &ctx),
        };
        for v in values {
            let row = match &predicted {
                Ok(m) => match m.get(&v.metric) {
                    Some(&p) => ReportRow::compare(
                        &exp.id,
                        &v.metric,
                        p,
                        v.value,
                        tolerance,
                        required,
                        &v.provenance,
                    ),
                    None => ReportRow::failed(
                        &exp.id,
                        &v.metric,
                        v.value,
                        tolerance,
                        required,
                        &v.provenance,
                        format!("experiment produces no {}", v.metric),
                    ),
                },
                Err(e) => ReportRow::failed(
                    &exp.id,
                    &v.metric,
                    v.value,
                    tolerance,
                    required,
                    &v.provenance,
                    e.to_string(),
                ),
            };
            rows.push(row);
        }
    }
    Ok(BenchmarkReport {
        seed: ctx.seed,
        mode,
        rows,
    })
}

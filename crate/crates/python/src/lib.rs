//! Python bindings: topology queries, single experiments and the golden
//! verification suite.

use std::collections::BTreeMap;

use bspsim_core::collectives::Mode;
use bspsim_core::cost_model::{LoadContext, TransferPath};
use bspsim_core::harness::{self, GoldenSet, RunContext, VerifyOptions};
use bspsim_core::{CostParams, TileId, Topology};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: bspsim_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn reference() -> (Topology, CostParams) {
    (Topology::reference(), CostParams::reference())
}

#[pyfunction]
fn device_to_dnc(device: usize) -> PyResult<usize> {
    Topology::reference().device_to_dnc(device).map_err(err)
}

#[pyfunction]
fn hop_distance(a: usize, b: usize) -> PyResult<usize> {
    Topology::reference().hop_distance(a, b).map_err(err)
}

/// Idle latency in ns between two tiles given as (dnc, local tile).
#[pyfunction]
fn p2p_latency_ns(src: (usize, usize), dst: (usize, usize)) -> PyResult<f64> {
    let (t, p) = reference();
    let path = TransferPath::new(&t, TileId::new(src.0, src.1), TileId::new(dst.0, dst.1)).map_err(err)?;
    Ok(p.p2p_latency(&path, &LoadContext::idle()).map_err(err)?.as_ns())
}

#[pyfunction]
fn experiment_ids() -> Vec<String> {
    harness::registry().into_iter().map(|e| e.id).collect()
}

#[pyfunction]
#[pyo3(signature = (id, seed=None))]
fn run(id: &str, seed: Option<u64>) -> PyResult<BTreeMap<String, f64>> {
    let (t, p) = reference();
    let g = GoldenSet::reference().map_err(err)?;
    let exp = harness::find(id).map_err(err)?;
    let ctx = RunContext {
        topology: &t,
        params: &p,
        seed: seed.unwrap_or(p.harness.seed),
        golden: Some(&g),
    };
    harness::run_experiment(&exp, &ctx).map_err(err)
}

/// Runs the suite and returns `(passed, csv_report)`.
#[pyfunction]
#[pyo3(signature = (filter=None, mode="analytic", tolerance=None, seed=None))]
fn verify(filter: Option<&str>, mode: &str, tolerance: Option<f64>, seed: Option<u64>) -> PyResult<(bool, String)> {
    let (t, p) = reference();
    let g = GoldenSet::reference().map_err(err)?;
    let mode: Mode = mode.parse().map_err(err)?;
    let mut opts = VerifyOptions {
        mode: Some(mode),
        tolerance,
        ..Default::default()
    };
    if let Some(f) = filter {
        opts = opts.with_filter(f).map_err(err)?;
    }
    let ctx = RunContext {
        topology: &t,
        params: &p,
        seed: seed.unwrap_or(p.harness.seed),
        golden: Some(&g),
    };
    let report = harness::verify(&ctx, &g, &opts).map_err(err)?;
    Ok((report.passed(), report.to_csv()))
}

#[pymodule]
fn bspsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(device_to_dnc, m)?)?;
    m.add_function(wrap_pyfunction!(hop_distance, m)?)?;
    m.add_function(wrap_pyfunction!(p2p_latency_ns, m)?)?;
    m.add_function(wrap_pyfunction!(experiment_ids, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}

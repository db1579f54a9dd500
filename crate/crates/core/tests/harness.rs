use std::collections::{BTreeMap, BTreeSet};

use bspsim_core::collectives::{
    max_message_size, scenario, spanned_processors, CollectiveOp, Mode,
};
use bspsim_core::harness::{
    self, calibrate_costs, find, processors_of, reference_dir, registry, GoldenSet, RunContext,
    VerifyOptions,
};
use bspsim_core::{CostParams, Topology};

fn fixtures() -> (Topology, CostParams, GoldenSet) {
    (
        Topology::reference(),
        CostParams::reference(),
        GoldenSet::reference().unwrap(),
    )
}

fn ctx<'a>(t: &'a Topology, p: &'a CostParams, g: &'a GoldenSet, seed: u64) -> RunContext<'a> {
    RunContext {
        topology: t,
        params: p,
        seed,
        golden: Some(g),
    }
}

#[test]
fn every_golden_row_has_exactly_one_experiment() {
    let g = GoldenSet::reference().unwrap();
    let mut count: BTreeMap<String, usize> = BTreeMap::new();
    for e in registry() {
        *count.entry(e.id).or_default() += 1;
    }
    assert!(count.values().all(|&c| c == 1), "duplicate experiment ids");
    let golden: BTreeSet<String> = g.experiment_ids().into_iter().collect();
    let exps: BTreeSet<String> = count.into_keys().collect();
    let uncovered: Vec<_> = golden.difference(&exps).collect();
    let orphaned: Vec<_> = exps.difference(&golden).collect();
    assert!(
        uncovered.is_empty(),
        "golden rows without an experiment: {uncovered:?}"
    );
    assert!(
        orphaned.is_empty(),
        "experiments without golden data: {orphaned:?}"
    );
}

#[test]
fn placement_matches_recorded_scale() {
    let g = GoldenSet::reference().unwrap();
    for r in &g.series {
        let l = &r.experiment_label;
        if l.len() == 1 {
            let c = l.chars().next().unwrap();
            let procs = processors_of(c).unwrap();
            // rows b-d involve the root's processor as well
            let n = if matches!(c, 'b' | 'c' | 'd') {
                2
            } else {
                procs.len()
            };
            assert_eq!(r.scale_ipus, n as f64, "{}", r.experiment_id);
        } else if let Some(n) = l.strip_prefix('n').and_then(|s| s.parse::<f64>().ok()) {
            assert!(
                (r.scale_ipus - n / 1216.0).abs() < 1e-6,
                "{}",
                r.experiment_id
            );
        }
    }
}

#[test]
fn golden_message_sizes_fit() {
    let (t, p, g) = fixtures();
    for r in &g.series {
        let op = match r
            .experiment_id
            .split("-latency-")
            .next()
            .unwrap()
            .split("-bw-")
            .next()
            .unwrap()
        {
            "broadcast" => CollectiveOp::Broadcast,
            "gather" => CollectiveOp::Gather,
            "scatter" => CollectiveOp::Scatter,
            "all-to-all" => CollectiveOp::AllToAll,
            _ => continue,
        };
        let (root, parts) = scenario(&t, &r.experiment_label).unwrap();
        assert_eq!(parts.len() as u64, r.participants, "{}", r.experiment_id);
        let procs = spanned_processors(Some(root), &parts);
        let max = max_message_size(
            op,
            parts.len(),
            procs,
            t.usable_memory_per_tile,
            &p.costs.collectives,
        )
        .unwrap();
        assert!(
            max >= r.message_bytes.unwrap(),
            "{}: {max}",
            r.experiment_id
        );
    }
}

#[test]
fn analytic_suite_passes_required_rows() {
    let (t, p, g) = fixtures();
    let report =
        harness::verify(&ctx(&t, &p, &g, 20191209), &g, &VerifyOptions::default()).unwrap();
    let failed: Vec<_> = report.failures().map(|r| &r.experiment_id).collect();
    assert!(report.passed(), "{failed:?}");
    assert_eq!(report.rows.len(), g.values().len());
}

#[test]
fn p2p_suite_within_ten_percent() {
    let (t, p, g) = fixtures();
    let opts = VerifyOptions::default().with_filter("p2p-*").unwrap();
    let report = harness::verify(&ctx(&t, &p, &g, 20191209), &g, &opts).unwrap();
    let mut n = 0;
    for r in report.rows.iter().filter(|r| r.required) {
        assert!(
            r.rel_error.unwrap().abs() <= 0.10,
            "{} {}",
            r.experiment_id,
            r.metric
        );
        n += 1;
    }
    assert_eq!(n, 26);
}

#[test]
fn zero_tolerance_fails() {
    let (t, p, g) = fixtures();
    let opts = VerifyOptions {
        tolerance: Some(0.0),
        ..VerifyOptions::default()
            .with_filter("p2p-bw-bidir-*")
            .unwrap()
    };
    let report = harness::verify(&ctx(&t, &p, &g, 1), &g, &opts).unwrap();
    assert!(!report.passed());
    assert!(report.failures().all(|r| r.rel_error.unwrap() != 0.0));
}

#[test]
fn empirical_fixed_point() {
    let (t, p, g) = fixtures();
    let opts = VerifyOptions {
        mode: Some(Mode::Empirical),
        ..Default::default()
    };
    let report = harness::verify(&ctx(&t, &p, &g, 1), &g, &opts).unwrap();
    assert_eq!(report.rows.len(), g.values().len());
    for r in &report.rows {
        assert_eq!(
            r.predicted.map(f64::to_bits),
            Some(r.golden.to_bits()),
            "{} {}",
            r.experiment_id,
            r.metric
        );
    }
}

#[test]
fn reports_are_deterministic() {
    let (t, p, g) = fixtures();
    let run = |seed| {
        harness::verify(&ctx(&t, &p, &g, seed), &g, &VerifyOptions::default())
            .unwrap()
            .to_csv()
    };
    assert_eq!(run(5), run(5));
    let random = VerifyOptions::default()
        .with_filter("p2p-latency-random-*")
        .unwrap();
    let a = harness::verify(&ctx(&t, &p, &g, 5), &g, &random).unwrap();
    let b = harness::verify(&ctx(&t, &p, &g, 6), &g, &random).unwrap();
    assert_eq!(a.rows.len(), b.rows.len());
    assert!(a.to_text().starts_with("# mode=analytic seed=5"));
}

#[test]
fn missing_golden_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(GoldenSet::load(dir.path()).is_err());
}

#[test]
fn unknown_experiment() {
    assert!(find("p2p-latency-noload-z").is_err());
}

#[test]
fn calibration_on_exact_synthetic_line() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("src_dnc,dst_dnc,hops,latency_ns,provenance\n");
    for (s, d, h) in [(0, 1, 1), (0, 3, 2), (0, 5, 3), (1, 14, 8)] {
        body.push_str(&format!(
            "{s},{d},{h},{},synthetic\n",
            600.0 + 150.0 * (h as f64 - 1.0)
        ));
    }
    std::fs::write(dir.path().join("ipu_latency.csv"), body).unwrap();
    let out = calibrate_costs(dir.path(), bspsim_core::REFERENCE_COSTS).unwrap();
    assert!((out.fit.per_hop_ns - 150.0).abs() < 1e-9);
    assert!(out.fit.residuals.iter().all(|r| r.abs() < 1e-9));
    let reference = calibrate_costs(&reference_dir(), bspsim_core::REFERENCE_COSTS).unwrap();
    assert!((145.0..=174.0).contains(&reference.fit.per_hop_ns));
}

#[test]
fn sweeps() {
    let (t, p, _) = fixtures();
    let c = RunContext {
        topology: &t,
        params: &p,
        seed: 1,
        golden: None,
    };
    let mem = harness::sweep(
        &find("memory-read-128").unwrap(),
        harness::Axis::MessageSize,
        &c,
    )
    .unwrap();
    assert!(mem.monotone);
    let at_8k = mem.points.iter().find(|pt| pt.0 == 8192.0).unwrap().1;
    let peak = p.memory_read_bandwidth(&t, 128, None, 6).unwrap().chip;
    assert!((at_8k / peak - 0.95).abs() < 1e-9);

    let bc = harness::sweep(&find("broadcast-bw-j").unwrap(), harness::Axis::Scale, &c).unwrap();
    assert!(bc.monotone);
    assert_eq!(bc.points.first().unwrap().0, 2.0);

    let th = harness::sweep(&find("memory-read-64").unwrap(), harness::Axis::Threads, &c).unwrap();
    let slope = th.points[0].1;
    for (x, y) in &th.points {
        assert!((y - slope * x).abs() / y < 1e-12);
    }

    let lat = harness::sweep(
        &find("memory-latency").unwrap(),
        harness::Axis::MessageSize,
        &c,
    )
    .unwrap();
    assert!(lat.points.iter().all(|pt| pt.1 == 6.0));

    assert!(harness::sweep(&find("roofline-read").unwrap(), harness::Axis::Scale, &c).is_err());
    assert!(mem.to_svg().contains("<polyline"));
}

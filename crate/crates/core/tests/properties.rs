use std::collections::BTreeMap;

use bspsim_core::collectives::{self, reduce_plan, CollectiveOp, CollectiveSpec, Scaling};
use bspsim_core::cost_model::{calibrate_hop_line, Flow, LoadContext, TransferPath};
use bspsim_core::roofline::{self, ComputeUnit, Precision};
use bspsim_core::topology::{build_reference_topology, LinkKind};
use bspsim_core::{run_superstep, CostParams, Message, Superstep, TileId, Topology, TopologySpec};
use proptest::prelude::*;

fn fixtures() -> (Topology, CostParams) {
    (Topology::reference(), CostParams::reference())
}

#[test]
fn hop_distance_is_a_metric() {
    let t = Topology::reference();
    let h = |a, b| t.hop_distance(a, b).unwrap();
    for a in 0..16 {
        for b in 0..16 {
            assert_eq!(h(a, b), h(b, a));
            assert_eq!(h(a, b) == 0, a == b);
            for c in 0..16 {
                assert!(h(a, c) <= h(a, b) + h(b, c), "{a} {b} {c}");
            }
        }
    }
    assert_eq!(h(0, 14), 7);
    assert_eq!(h(1, 15), 7);
}

#[test]
fn route_structure() {
    let t = Topology::reference();
    for a in 0..16 {
        for b in 0..16 {
            let r = t.route(a, b).unwrap();
            assert_eq!(r.len(), t.hop_distance(a, b).unwrap());
            assert!(r.windows(2).all(|w| w[0].to == w[1].from));
            assert_eq!(r.first().map_or(a, |h| h.from), a);
            assert_eq!(r.last().map_or(a, |h| h.to), b);
            assert!(r.iter().filter(|h| h.is_rung()).count() <= 1, "{a}->{b}");
            let pass = r.iter().filter(|h| h.kind == LinkKind::PassThrough).count();
            let cross = t.board_of(a) != t.board_of(b) && a % 2 != b % 2;
            assert_eq!(pass, usize::from(cross), "{a}->{b}");
        }
    }
}

#[test]
fn global_numbering_is_a_bijection() {
    let t = Topology::reference();
    let n = t.total_tiles();
    assert_eq!(n, 16 * 1216);
    for i in 0..n {
        let tile = t.tile_from_global(i).unwrap();
        assert_eq!(t.global_index(tile), i);
    }
    assert!(t.tile_from_global(n).is_err());
}

#[test]
fn capacity_safety_on_golden_sizes() {
    let (t, p) = fixtures();
    let g = bspsim_core::harness::GoldenSet::reference().unwrap();
    let mut checked = 0;
    for r in &g.series {
        let Some(op) = ["broadcast", "gather", "scatter", "all-to-all"]
            .into_iter()
            .find(|op| r.experiment_id.starts_with(&format!("{op}-")))
        else {
            continue;
        };
        let op: CollectiveOp = op.parse().unwrap();
        let (root, parts) = collectives::scenario(&t, &r.experiment_label).unwrap();
        let spec = CollectiveSpec::new(
            op,
            op.is_rooted().then_some(root),
            parts,
            r.message_bytes.unwrap(),
        )
        .unwrap();
        spec.validate(&t, &p.costs.collectives)
            .unwrap_or_else(|e| panic!("{}: {e}", r.experiment_id));
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn message_counts_match_enumeration() {
    let (t, p) = fixtures();
    let root = TileId::new(0, 0);
    for n in 1..=64 {
        let parts: Vec<TileId> = (0..n).map(|i| TileId::new(i % 4, 1 + i / 4)).collect();
        for op in [
            CollectiveOp::Broadcast,
            CollectiveOp::Scatter,
            CollectiveOp::Gather,
            CollectiveOp::AllToAll,
        ] {
            let spec =
                CollectiveSpec::new(op, op.is_rooted().then_some(root), parts.clone(), 4).unwrap();
            let step = collectives::plan(&spec, &t, &p).unwrap();
            let mut brute = Vec::new();
            for &a in &parts {
                match op {
                    CollectiveOp::AllToAll => brute.extend(parts.iter().map(|&b| (a, b))),
                    CollectiveOp::Gather => brute.push((a, root)),
                    _ => brute.push((root, a)),
                }
            }
            let mut got: Vec<_> = step.messages.iter().map(|m| (m.src, m.dst)).collect();
            got.sort();
            brute.sort();
            assert_eq!(got, brute, "{op} n={n}");
            assert_eq!(spec.transfer_count(), brute.len());
        }
    }
}

#[test]
fn ceilings_scale_with_tiles_and_clock() {
    let p = CostParams::reference();
    let base = Topology::reference();
    let single = |t: &Topology| {
        roofline::compute_ceiling(t, &p, Precision::Single, ComputeUnit::Amp)
            .unwrap()
            .chip_flops
    };
    for (tiles, ghz) in [(1216, 1.6), (608, 1.6), (1216, 0.8), (304, 2.0)] {
        let spec = TopologySpec::reference()
            .with_tiles_per_processor(tiles)
            .with_clock_ghz(ghz);
        let t = build_reference_topology(&spec).unwrap();
        let scale = (tiles as f64 / 1216.0) * (ghz / 1.6);
        assert!((single(&t) / single(&base) - scale).abs() < 1e-12);
        let read = roofline::memory_ceiling(&t, &p, roofline::Direction::Read);
        let base_read = roofline::memory_ceiling(&base, &p, roofline::Direction::Read);
        assert!((read / base_read - scale).abs() < 1e-12);
    }
}

fn tile() -> impl Strategy<Value = TileId> {
    (0usize..16, 0usize..1216).prop_map(|(p, t)| TileId::new(p, t))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn id_maps_invert(dnc in 0usize..16) {
        let t = Topology::reference();
        prop_assert_eq!(t.device_to_dnc(t.dnc_to_device(dnc).unwrap()).unwrap(), dnc);
    }

    #[test]
    fn single_message_matches_cost_model(src in tile(), dst in tile(), bytes in 0u64..100_000) {
        let (t, p) = fixtures();
        let tr = run_superstep(&t, &p, &Superstep::exchange(vec![Message::new(src, dst, bytes)])).unwrap();
        let path = TransferPath::new(&t, src, dst).unwrap();
        let load = LoadContext::from_flows(&p, &[Flow { path: &path, group: None }]).unwrap();
        let r = &tr.per_transfer[0];
        prop_assert_eq!(r.latency, p.p2p_latency(&path, &LoadContext::idle()).unwrap());
        prop_assert_eq!(r.rate, p.transfer_bandwidth(&path, bytes, &load).unwrap().streaming);
    }

    #[test]
    fn bandwidth_respects_caps(src in tile(), dst in tile(), k in 1usize..200, bytes in 1u64..1 << 20) {
        let (t, p) = fixtures();
        let paths: Vec<TransferPath> = (0..k)
            .map(|i| TransferPath::new(&t, TileId::new(src.processor_dnc, (src.local_tile + i) % 1216), TileId::new(dst.processor_dnc, (dst.local_tile + i) % 1216)))
            .collect::<Result<_, _>>()
            .unwrap();
        let flows: Vec<Flow<'_>> = paths.iter().map(|path| Flow { path, group: None }).collect();
        let load = LoadContext::from_flows(&p, &flows).unwrap();
        let bw = p.transfer_bandwidth(&paths[0], bytes, &load).unwrap();
        let class = paths[0].class().unwrap();
        prop_assert!(bw.per_transfer <= p.path_peak_bw(&class) * (1.0 + 1e-12));
        prop_assert!(bw.per_transfer <= bw.streaming);
        for r in paths[0].resources().unwrap() {
            prop_assert!(bw.streaming <= p.capacity(&r) * (1.0 + 1e-12));
            prop_assert!((0.0..=1.0).contains(&load.utilization_of(&r)));
        }
        // adding streams never speeds one up
        let fewer = LoadContext::from_flows(&p, &flows[..k.div_ceil(2)]).unwrap();
        prop_assert!(p.transfer_bandwidth(&paths[0], bytes, &fewer).unwrap().streaming >= bw.streaming);
    }

    #[test]
    fn threads_scale_linearly(width in prop::sample::select(vec![32u32, 64, 128]), threads in 1u32..=6) {
        let (t, p) = fixtures();
        let bw = p.memory_read_bandwidth(&t, width, None, threads).unwrap().per_tile;
        let six = p.memory_read_bandwidth(&t, width, None, 6).unwrap().per_tile;
        prop_assert!((bw - six * threads as f64 / 6.0).abs() <= 1e-12 * six);
    }

    #[test]
    fn hop_fit_round_trip(base_ps in 100_000u64..2_000_000, per_hop_ps in 10_000u64..500_000) {
        // parameters on the picosecond grid, so the generated latencies are exact
        let (base, per_hop) = (base_ps as f64 / 1e3, per_hop_ps as f64 / 1e3);
        let (t, mut p) = fixtures();
        p.costs.inter_board_rail.base_latency_ns = base;
        p.costs.per_hop_latency_ns = per_hop;
        let samples: Vec<(usize, f64)> = (1..8)
            .map(|k| {
                let path = TransferPath::new(&t, TileId::new(0, 0), TileId::new(2 * k, 0)).unwrap();
                (t.hop_distance(0, 2 * k).unwrap(), p.p2p_latency(&path, &LoadContext::idle()).unwrap().as_ns())
            })
            .collect();
        let fit = calibrate_hop_line(&samples).unwrap();
        prop_assert!(((fit.per_hop_ns - per_hop) / per_hop).abs() < 1e-6);
        prop_assert!(((fit.base_ns - base) / base).abs() < 1e-6);
    }

    #[test]
    fn reduce_sums_exactly(tiles in prop::collection::btree_set(tile(), 1..64), k in 1u64..6, seed in any::<u64>()) {
        let (t, p) = fixtures();
        let parts: Vec<TileId> = tiles.into_iter().collect();
        let plan = reduce_plan(&t, &p, &parts, k, Scaling::Weak).unwrap();
        let mut x = seed;
        let mut next = || { x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); x >> 40 };
        let ints: BTreeMap<TileId, Vec<i64>> = parts.iter().map(|&t| (t, (0..k).map(|_| next() as i64 - (1 << 23)).collect())).collect();
        let direct: i64 = ints.values().flatten().sum();
        prop_assert_eq!(plan.evaluate(&ints).unwrap(), direct);

        let reals: BTreeMap<TileId, Vec<f64>> = ints.iter().map(|(&t, v)| (t, v.iter().map(|&i| i as f64 * 1e-3 + 0.5).collect())).collect();
        let direct: f64 = reals.values().flatten().sum();
        let got = plan.evaluate(&reals).unwrap();
        prop_assert!((got - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        prop_assert_eq!(plan.total_operands(), k * parts.len() as u64);
    }

    #[test]
    fn strong_split_conserves(total in 1u64..50_000, n in 1usize..1216) {
        let (t, p) = fixtures();
        let parts: Vec<TileId> = (0..n).map(|i| TileId::new(0, i)).collect();
        let plan = reduce_plan(&t, &p, &parts, total, Scaling::Strong).unwrap();
        prop_assert_eq!(plan.total_operands(), total);
    }

    #[test]
    fn collective_latency_grows_with_participants(
        op in prop::sample::select(vec![CollectiveOp::Broadcast, CollectiveOp::Scatter, CollectiveOp::Gather]),
        a in 1usize..400,
        b in 1usize..400,
        bytes in 1u64..=64,
    ) {
        let (t, p) = fixtures();
        let root = TileId::new(0, 0);
        let lat = |n: usize| {
            let spec = CollectiveSpec::new(op, Some(root), (1..=n).map(|i| TileId::new(0, i)), bytes).unwrap();
            collectives::predict(&spec, &t, &p).unwrap().total_latency
        };
        prop_assert!(lat(a.min(b)) <= lat(a.max(b)));
    }

    #[test]
    fn all_to_all_latency_grows(a in 1usize..40, b in 1usize..40) {
        let (t, p) = fixtures();
        let lat = |n: usize| {
            let spec = CollectiveSpec::new(CollectiveOp::AllToAll, None, (0..n).map(|i| TileId::new(0, i)), 4).unwrap();
            collectives::predict(&spec, &t, &p).unwrap().total_latency
        };
        prop_assert!(lat(a.min(b)) <= lat(a.max(b)));
    }

    #[test]
    fn gemm_monotone(n1 in 1u64..10_000, n2 in 1u64..10_000, mixed in any::<bool>()) {
        let (t, p) = fixtures();
        let prec = if mixed { Precision::Mixed } else { Precision::Single };
        let (lo, hi) = (n1.min(n2), n1.max(n2));
        let a = roofline::gemm_upper_bound(&t, &p, lo, prec).unwrap();
        let b = roofline::gemm_upper_bound(&t, &p, hi, prec).unwrap();
        prop_assert!(a.ideal_secs <= b.ideal_secs);
        prop_assert!(a.effective_secs >= a.ideal_secs);
        prop_assert!(a.feasible || !b.feasible);
    }
}

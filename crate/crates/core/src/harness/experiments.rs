//! Named experiments: one per golden row id.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bsp_engine::{run_superstep, Message, Superstep};
use crate::collectives::{
    predict, reduce_compute_time, reduce_plan, scenario, CollectiveOp, CollectiveSpec, Scaling,
    OPERAND_BYTES,
};
use crate::cost_model::{calibrate_hop_line, BarrierParams, CostParams};
use crate::error::{Error, Result};
use crate::roofline::{
    compute_ceiling, gemm_max_n, gemm_upper_bound, memory_ceiling, ComputeUnit, Direction,
    Precision,
};
use crate::topology::{TileId, Topology};

use super::golden::GoldenSet;

/// On-chip subset sizes used by the scaling tables.
pub const ON_CHIP_SUBSETS: [usize; 10] = [1, 2, 4, 8, 16, 38, 76, 152, 304, 608];
pub const SYSTEM_LABELS: [char; 6] = ['e', 'f', 'g', 'h', 'i', 'j'];
pub const REDUCE_BASELINE_OPERANDS: [u64; 5] = [1216, 2432, 4864, 9728, 19456];

/// Whether a measurement excludes synchronisation (on one chip) or
/// includes it (host-timed, across chips).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TimingScope {
    Device,
    Host,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum P2pPattern {
    /// One message from tile 0:0 into placement a–d.
    Single(char),
    /// The first `n` tiles of processor 0 each send to a distinct tile of
    /// the same processor.
    OnChip(usize),
    /// Every tile of processor 0 sends to a distinct tile of `dnc`, and
    /// back again when `bidir`.
    Pair { dnc: usize, bidir: bool },
    /// Every tile of the placement sends to a uniformly drawn other tile
    /// of the placement.
    Random(char),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ReduceTiles {
    /// Tile 0:0 alone.
    Single,
    /// Tile 0 of each of the first `n` processors.
    Diameter(usize),
    /// The first `n` tiles of processor 0.
    Subset(usize),
    Label(char),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum HostDest {
    /// First `n` tiles of processor 0.
    Tiles(usize),
    Processor {
        dnc: usize,
        whole: bool,
    },
    /// Tile 0 of each processor of the placement, or all of its tiles.
    System {
        label: char,
        whole: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MessageSize {
    /// A single operand, four bytes.
    Minimum,
    /// The largest size the operation admits at this scale.
    Maximum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Scenario {
    P2p(P2pPattern),
    Collective {
        op: CollectiveOp,
        label: String,
        size: MessageSize,
    },
    Reduce {
        tiles: ReduceTiles,
        /// Per tile for weak scaling, in total for strong.
        operands: u64,
        scaling: Scaling,
    },
    /// `tiles` tiles each summing their own operands with no exchange.
    IndependentReduce {
        tiles: usize,
        operands: u64,
    },
    Host {
        dest: HostDest,
        bytes_per_tile: u64,
    },
    MemoryRead {
        width_bits: Option<u32>,
    },
    MemoryLatency,
    Compute {
        precision: Precision,
        unit: ComputeUnit,
    },
    MemoryCeiling(Direction),
    GemmEffective(Precision),
    GemmMaxN(Precision),
    HopCalibration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Experiment {
    pub id: String,
    pub scenario: Scenario,
    pub scope: TimingScope,
    pub tolerance: f64,
    /// Required rows decide the verification outcome; the rest are reported.
    pub required: bool,
}

pub type Metrics = BTreeMap<String, f64>;

pub struct RunContext<'a> {
    pub topology: &'a Topology,
    pub params: &'a CostParams,
    pub seed: u64,
    /// Needed only by the hop calibration experiment.
    pub golden: Option<&'a GoldenSet>,
}

const P2P_BYTES: u64 = 4;
const HOST_LATENCY_BYTES: u64 = 4;
const HOST_BW_BYTES: u64 = 40_000;
const REDUCE_SMALL: u64 = 1_000;
const REDUCE_LARGE: u64 = 25_000;
const STRONG_TOTAL: u64 = 19_456;

fn policy(id: &str) -> (f64, bool) {
    let quadrant = |rest: &str| matches!(rest, "a" | "b" | "c" | "d");
    if let Some(r) = id.strip_prefix("p2p-latency-noload-") {
        return (1e-9, quadrant(r));
    }
    if let Some(r) = id.strip_prefix("p2p-latency-load-") {
        return (0.10, quadrant(r));
    }
    if id.starts_with("p2p-latency-") {
        return (0.10, false);
    }
    if let Some(r) = id.strip_prefix("p2p-bw-noload-") {
        return (0.05, quadrant(r));
    }
    if id.starts_with("p2p-bw-") {
        let required = matches!(
            id,
            "p2p-bw-load-a"
                | "p2p-bw-mono-b"
                | "p2p-bw-mono-c"
                | "p2p-bw-mono-d"
                | "p2p-bw-bidir-b"
        );
        return (0.05, required);
    }
    if id.starts_with("memory-") {
        return (0.02, !id.contains("float"));
    }
    if id.starts_with("host-latency-") {
        return (0.02, !id.starts_with("host-latency-tiles"));
    }
    if id.starts_with("host-bw-") {
        return (
            0.03,
            id == "host-bw-tiles-1216" || id.starts_with("host-bw-multi"),
        );
    }
    if id.ends_with("-max-n") {
        return (0.0, true);
    }
    if id.starts_with("roofline-") || id.starts_with("gemm-") {
        return (0.005, id != "gemm-mixed-matmul-peak");
    }
    if id == "calibration-per-hop" {
        // the accepted range 145..174 ns around the quoted 160 ns average
        return (14.0 / 160.0, true);
    }
    let required = matches!(
        id,
        "broadcast-latency-a"
            | "gather-latency-j"
            | "scatter-latency-j"
            | "reduce-weak-baseline-19456"
            | "reduce-strong-baseline"
            | "reduce-weak-scale-a"
            | "reduce-weak-scale-j"
    );
    (0.25, required)
}

fn on_chip_label(label: &str) -> bool {
    label == "self" || label == "a" || label.starts_with('n')
}

fn scope_of(id: &str, s: &Scenario) -> TimingScope {
    let device = match s {
        Scenario::P2p(P2pPattern::Single(c)) => *c == 'a',
        Scenario::P2p(P2pPattern::OnChip(_)) => true,
        Scenario::P2p(_) => false,
        Scenario::Collective { label, .. } => on_chip_label(label),
        Scenario::Reduce { tiles, .. } => match tiles {
            ReduceTiles::Single | ReduceTiles::Subset(_) | ReduceTiles::Label('a') => true,
            ReduceTiles::Diameter(n) => *n == 1,
            ReduceTiles::Label(_) => false,
        },
        Scenario::IndependentReduce { .. } => true,
        Scenario::Host { .. } => false,
        _ => !id.starts_with("calibration"),
    };
    if device {
        TimingScope::Device
    } else {
        TimingScope::Host
    }
}

fn push(out: &mut Vec<Experiment>, id: String, scenario: Scenario) {
    let (tolerance, required) = policy(&id);
    out.push(Experiment {
        scope: scope_of(&id, &scenario),
        id,
        scenario,
        tolerance,
        required,
    });
}

/// Every experiment, in a fixed order.
pub fn registry() -> Vec<Experiment> {
    use P2pPattern::*;
    use Scenario as S;
    let mut v = Vec::new();
    let quad = ['a', 'b', 'c', 'd'];
    let dnc_of = |c: char| (c as u8 - b'a') as usize;

    for c in quad {
        push(&mut v, format!("p2p-latency-noload-{c}"), S::P2p(Single(c)));
    }
    for c in quad {
        let p = if c == 'a' {
            OnChip(1216)
        } else {
            Pair {
                dnc: dnc_of(c),
                bidir: false,
            }
        };
        push(&mut v, format!("p2p-latency-load-{c}"), S::P2p(p));
    }
    for n in ON_CHIP_SUBSETS {
        push(&mut v, format!("p2p-latency-load-n{n}"), S::P2p(OnChip(n)));
    }
    for c in ['b', 'c', 'd'] {
        push(
            &mut v,
            format!("p2p-latency-long-{c}"),
            S::P2p(Pair {
                dnc: dnc_of(c),
                bidir: false,
            }),
        );
    }
    for c in SYSTEM_LABELS {
        push(&mut v, format!("p2p-latency-random-{c}"), S::P2p(Random(c)));
    }
    for c in quad {
        push(&mut v, format!("p2p-bw-noload-{c}"), S::P2p(Single(c)));
    }
    for c in quad {
        let p = if c == 'a' {
            OnChip(1216)
        } else {
            Pair {
                dnc: dnc_of(c),
                bidir: false,
            }
        };
        push(&mut v, format!("p2p-bw-load-short-{c}"), S::P2p(p));
    }
    for n in ON_CHIP_SUBSETS {
        push(&mut v, format!("p2p-bw-load-n{n}"), S::P2p(OnChip(n)));
    }
    push(&mut v, "p2p-bw-load-a".into(), S::P2p(OnChip(1216)));
    for bidir in [false, true] {
        for c in ['b', 'c', 'd'] {
            let kind = if bidir { "bidir" } else { "mono" };
            push(
                &mut v,
                format!("p2p-bw-{kind}-{c}"),
                S::P2p(Pair {
                    dnc: dnc_of(c),
                    bidir,
                }),
            );
        }
    }
    for c in SYSTEM_LABELS {
        push(&mut v, format!("p2p-bw-random-{c}"), S::P2p(Random(c)));
    }

    let system: Vec<String> = "abcdefghij".chars().map(String::from).collect();
    for op in [
        CollectiveOp::Broadcast,
        CollectiveOp::Gather,
        CollectiveOp::Scatter,
        CollectiveOp::AllToAll,
    ] {
        // a one-tile subset is the root's own copy for the participant-symmetric ops
        let first = if op == CollectiveOp::Broadcast { 0 } else { 1 };
        let subsets: Vec<String> = ON_CHIP_SUBSETS[first..]
            .iter()
            .map(|n| format!("n{n}"))
            .collect();
        let mut lat = vec!["self".to_string()];
        lat.extend(subsets.iter().cloned());
        let mut bw = if op == CollectiveOp::Broadcast {
            Vec::new()
        } else {
            vec!["self".to_string()]
        };
        bw.extend(subsets.iter().cloned());
        if op != CollectiveOp::AllToAll {
            lat.extend(system.iter().cloned());
            bw.extend(system.iter().cloned());
        } else {
            bw.clear();
        }
        for (metric, labels, size) in [
            ("latency", &lat, MessageSize::Minimum),
            ("bw", &bw, MessageSize::Maximum),
        ] {
            for l in labels {
                push(
                    &mut v,
                    format!("{}-{metric}-{l}", op.slug()),
                    S::Collective {
                        op,
                        label: l.clone(),
                        size,
                    },
                );
            }
        }
    }

    let reduce = |tiles, operands, scaling| S::Reduce {
        tiles,
        operands,
        scaling,
    };
    for k in REDUCE_BASELINE_OPERANDS {
        push(
            &mut v,
            format!("reduce-weak-baseline-{k}"),
            reduce(ReduceTiles::Single, k, Scaling::Weak),
        );
    }
    for n in [1, 2, 4, 8, 16] {
        push(
            &mut v,
            format!("reduce-weak-diameter-{n}"),
            reduce(ReduceTiles::Diameter(n), 1, Scaling::Weak),
        );
    }
    let scale_labels: Vec<char> = std::iter::once('a').chain(SYSTEM_LABELS).collect();
    for &c in &scale_labels {
        push(
            &mut v,
            format!("reduce-weak-scale-{c}"),
            reduce(ReduceTiles::Label(c), 1, Scaling::Weak),
        );
    }
    push(
        &mut v,
        "reduce-strong-baseline".into(),
        reduce(ReduceTiles::Single, STRONG_TOTAL, Scaling::Strong),
    );
    for &c in &scale_labels {
        push(
            &mut v,
            format!("reduce-strong-{c}"),
            reduce(ReduceTiles::Label(c), STRONG_TOTAL, Scaling::Strong),
        );
    }
    for k in REDUCE_BASELINE_OPERANDS {
        push(
            &mut v,
            format!("reduce-bw-baseline-{k}"),
            S::IndependentReduce {
                tiles: 1000,
                operands: k,
            },
        );
    }
    for n in ON_CHIP_SUBSETS {
        push(
            &mut v,
            format!("reduce-bw-tiles-n{n}"),
            reduce(ReduceTiles::Subset(n), REDUCE_LARGE, Scaling::Weak),
        );
    }
    push(
        &mut v,
        "reduce-bw-tiles-a".into(),
        reduce(ReduceTiles::Label('a'), REDUCE_LARGE, Scaling::Weak),
    );
    for (name, k) in [("small", REDUCE_SMALL), ("large", REDUCE_LARGE)] {
        for &c in &scale_labels {
            push(
                &mut v,
                format!("reduce-bw-{name}-{c}"),
                reduce(ReduceTiles::Label(c), k, Scaling::Weak),
            );
        }
    }

    let tiles = ON_CHIP_SUBSETS.iter().copied().chain([1216]);
    for (metric, bytes, whole) in [
        ("latency", HOST_LATENCY_BYTES, false),
        ("bw", HOST_BW_BYTES, true),
    ] {
        for n in tiles.clone() {
            push(
                &mut v,
                format!("host-{metric}-tiles-{n}"),
                S::Host {
                    dest: HostDest::Tiles(n),
                    bytes_per_tile: bytes,
                },
            );
        }
        // processor 0 of the bandwidth table is the tiles-1216 row
        for dnc in usize::from(whole)..16 {
            push(
                &mut v,
                format!("host-{metric}-ipu-{dnc}"),
                S::Host {
                    dest: HostDest::Processor { dnc, whole },
                    bytes_per_tile: bytes,
                },
            );
        }
        for label in SYSTEM_LABELS {
            push(
                &mut v,
                format!("host-{metric}-multi-{label}"),
                S::Host {
                    dest: HostDest::System { label, whole },
                    bytes_per_tile: bytes,
                },
            );
        }
    }

    for (id, width_bits) in [
        ("theoretical", None),
        ("128", Some(128)),
        ("64-float2", Some(64)),
        ("64", Some(64)),
        ("64-float4", Some(64)),
        ("32", Some(32)),
    ] {
        push(
            &mut v,
            format!("memory-read-{id}"),
            S::MemoryRead { width_bits },
        );
    }
    push(&mut v, "memory-latency".into(), S::MemoryLatency);
    push(&mut v, "memory-latency-cycles".into(), S::MemoryLatency);

    for precision in [Precision::Single, Precision::Mixed] {
        for (name, unit) in [("amp", ComputeUnit::Amp), ("vector", ComputeUnit::Vector)] {
            push(
                &mut v,
                format!("roofline-{precision}-{name}"),
                S::Compute { precision, unit },
            );
        }
    }
    push(
        &mut v,
        "roofline-read".into(),
        S::MemoryCeiling(Direction::Read),
    );
    push(
        &mut v,
        "roofline-write".into(),
        S::MemoryCeiling(Direction::Write),
    );
    for precision in [Precision::Single, Precision::Mixed] {
        push(
            &mut v,
            format!("gemm-{precision}-effective"),
            S::GemmEffective(precision),
        );
        push(
            &mut v,
            format!("gemm-{precision}-max-n"),
            S::GemmMaxN(precision),
        );
    }
    push(
        &mut v,
        "gemm-mixed-matmul-peak".into(),
        S::GemmEffective(Precision::Mixed),
    );
    push(&mut v, "calibration-per-hop".into(), S::HopCalibration);
    v
}

pub fn find(id: &str) -> Result<Experiment> {
    registry()
        .into_iter()
        .find(|e| e.id == id)
        .ok_or_else(|| Error::UnknownExperiment(id.into()))
}

pub fn processors_of(label: char) -> Option<Vec<usize>> {
    let n = match label {
        'a' => return Some(vec![0]),
        'b'..='d' => return Some(vec![(label as u8 - b'a') as usize]),
        'e'..='g' => return Some(vec![0, (label as u8 - b'd') as usize]),
        'h' => 4,
        'i' => 8,
        'j' => 16,
        _ => return None,
    };
    Some((0..n).collect())
}

fn placement(label: char) -> Result<Vec<usize>> {
    processors_of(label)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown placement {label:?}")))
}

fn check_processors(topology: &Topology, dncs: &[usize]) -> Result<()> {
    for &d in dncs {
        if d >= topology.processor_count() {
            return Err(Error::OutOfRange {
                what: "processor",
                id: d,
                limit: topology.processor_count(),
            });
        }
    }
    Ok(())
}

fn derangement(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    for i in 0..n {
        if p[i] == i {
            p.swap(i, (i + 1) % n);
        }
    }
    p
}

/// Messages of a point-to-point pattern.
pub fn p2p_messages(topology: &Topology, pattern: &P2pPattern, seed: u64) -> Result<Vec<Message>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tpp = topology.tiles_per_processor;
    let msg = |s: TileId, d: TileId| Message::new(s, d, P2P_BYTES);
    let messages = match *pattern {
        P2pPattern::Single(c) => {
            let dnc = placement(c)?[0];
            check_processors(topology, &[dnc])?;
            let local = usize::from(dnc == 0);
            vec![msg(TileId::new(0, 0), TileId::new(dnc, local))]
        }
        P2pPattern::OnChip(n) => {
            if n > tpp {
                return Err(Error::InvalidArgument(format!(
                    "{n} transfers on a {tpp}-tile processor"
                )));
            }
            if 2 * n <= tpp {
                let mut dst: Vec<usize> = (n..2 * n).collect();
                dst.shuffle(&mut rng);
                (0..n)
                    .map(|i| msg(TileId::new(0, i), TileId::new(0, dst[i])))
                    .collect()
            } else {
                if n < 2 {
                    return Err(Error::InvalidArgument(
                        "a single tile cannot exchange with itself".into(),
                    ));
                }
                let p = derangement(&mut rng, n);
                (0..n)
                    .map(|i| msg(TileId::new(0, i), TileId::new(0, p[i])))
                    .collect()
            }
        }
        P2pPattern::Pair { dnc, bidir } => {
            check_processors(topology, &[dnc])?;
            let mut out = Vec::with_capacity(2 * tpp);
            let mut fwd: Vec<usize> = (0..tpp).collect();
            fwd.shuffle(&mut rng);
            out.extend((0..tpp).map(|i| msg(TileId::new(0, i), TileId::new(dnc, fwd[i]))));
            if bidir {
                let mut back: Vec<usize> = (0..tpp).collect();
                back.shuffle(&mut rng);
                out.extend((0..tpp).map(|i| msg(TileId::new(dnc, i), TileId::new(0, back[i]))));
            }
            out
        }
        P2pPattern::Random(c) => {
            let dncs = placement(c)?;
            check_processors(topology, &dncs)?;
            let tiles: Vec<TileId> = dncs.iter().flat_map(|&d| topology.tiles_of(d)).collect();
            let n = tiles.len();
            (0..n)
                .map(|i| {
                    // uniform over the other n - 1 tiles
                    let j = rng.random_range(0..n - 1);
                    msg(tiles[i], tiles[if j >= i { j + 1 } else { j }])
                })
                .collect()
        }
    };
    Ok(messages)
}

fn reduce_tiles(topology: &Topology, tiles: &ReduceTiles) -> Result<Vec<TileId>> {
    Ok(match *tiles {
        ReduceTiles::Single => vec![TileId::new(0, 0)],
        ReduceTiles::Diameter(n) => {
            let d: Vec<usize> = (0..n).collect();
            check_processors(topology, &d)?;
            d.into_iter().map(|p| TileId::new(p, 0)).collect()
        }
        ReduceTiles::Subset(n) => {
            if n == 0 || n > topology.tiles_per_processor {
                return Err(Error::InvalidArgument(format!("subset of {n} tiles")));
            }
            (0..n).map(|t| TileId::new(0, t)).collect()
        }
        ReduceTiles::Label(c) => scenario(topology, &c.to_string())?.1,
    })
}

fn host_dest(topology: &Topology, dest: &HostDest) -> Result<Vec<TileId>> {
    let procs = |dncs: Vec<usize>, whole: bool| -> Result<Vec<TileId>> {
        check_processors(topology, &dncs)?;
        Ok(if whole {
            dncs.iter().flat_map(|&d| topology.tiles_of(d)).collect()
        } else {
            dncs.iter().map(|&d| TileId::new(d, 0)).collect()
        })
    };
    match *dest {
        HostDest::Tiles(n) => {
            if n == 0 || n > topology.tiles_per_processor {
                return Err(Error::InvalidArgument(format!(
                    "host transfer to {n} tiles"
                )));
            }
            Ok((0..n).map(|t| TileId::new(0, t)).collect())
        }
        HostDest::Processor { dnc, whole } => procs(vec![dnc], whole),
        HostDest::System { label, whole } => procs(placement(label)?, whole),
    }
}

/// The collective of a named placement, at one operand or at the largest
/// size the placement admits.
pub fn collective_spec(
    topology: &Topology,
    params: &CostParams,
    op: CollectiveOp,
    label: &str,
    size: MessageSize,
) -> Result<CollectiveSpec> {
    let (root, parts) = scenario(topology, label)?;
    let spec = CollectiveSpec::new(op, op.is_rooted().then_some(root), parts, OPERAND_BYTES)?;
    Ok(match size {
        MessageSize::Minimum => spec,
        MessageSize::Maximum => CollectiveSpec {
            message_bytes: spec.max_message_size(topology, &params.costs.collectives)?,
            ..spec
        },
    })
}

fn metrics(latency_ns: Option<f64>, aggregate: f64, count: usize) -> Metrics {
    let mut m = Metrics::new();
    if let Some(l) = latency_ns {
        m.insert("latency_ns".into(), l);
    }
    m.insert("aggregate_bw".into(), aggregate);
    m.insert("per_transfer_bw".into(), aggregate / count.max(1) as f64);
    m
}

fn scoped(params: &CostParams, scope: TimingScope) -> CostParams {
    let mut p = params.clone();
    if scope == TimingScope::Device {
        p.costs.barrier = BarrierParams::default();
    }
    p
}

/// Analytic prediction for one experiment. The returned metric names
/// follow the golden schema; rows carry whichever of them the golden data
/// has.
pub fn run_experiment(exp: &Experiment, ctx: &RunContext<'_>) -> Result<Metrics> {
    let topo = ctx.topology;
    let params = &scoped(ctx.params, exp.scope);
    let one = |name: &str, v: f64| Metrics::from([(name.to_string(), v)]);
    Ok(match &exp.scenario {
        Scenario::P2p(pattern) => {
            let messages = p2p_messages(topo, pattern, ctx.seed)?;
            if messages.is_empty() {
                return Err(Error::EmptyScenario(exp.id.clone()));
            }
            let trace = run_superstep(topo, params, &Superstep::exchange(messages))?;
            let latency = trace
                .per_transfer
                .iter()
                .map(|r| r.latency)
                .max()
                .unwrap_or_default();
            // a long-message run finishes with its slowest stream
            let slowest = trace
                .per_transfer
                .iter()
                .map(|r| r.rate)
                .fold(f64::INFINITY, f64::min);
            let n = trace.per_transfer.len();
            metrics(Some(latency.as_ns()), slowest * n as f64, n)
        }
        Scenario::Collective { op, label, size } => {
            let spec = collective_spec(topo, params, *op, label, *size)?;
            let r = predict(&spec, topo, params)?;
            let mut m = metrics(Some(r.total_latency.as_ns()), r.aggregate_bw, 1);
            m.insert("per_transfer_bw".into(), r.per_transfer_bw);
            m
        }
        Scenario::Reduce {
            tiles,
            operands,
            scaling,
        } => {
            let parts = reduce_tiles(topo, tiles)?;
            let plan = reduce_plan(topo, params, &parts, *operands, *scaling)?;
            let t = plan.time(topo, params)?;
            let bytes = (plan.total_operands() * OPERAND_BYTES) as f64;
            let agg = if t.as_secs() > 0.0 {
                bytes / t.as_secs()
            } else {
                0.0
            };
            metrics(Some(t.as_ns()), agg, parts.len())
        }
        Scenario::IndependentReduce { tiles, operands } => {
            let t = reduce_compute_time(params, *operands);
            let agg = (*tiles as u64 * operands * OPERAND_BYTES) as f64 / t.as_secs();
            metrics(Some(t.as_ns()), agg, *tiles)
        }
        Scenario::Host {
            dest,
            bytes_per_tile,
        } => {
            let tiles = host_dest(topo, dest)?;
            let h = params.host_transfer(topo, *bytes_per_tile, &tiles)?;
            let mut m = metrics(Some(h.latency.as_ns()), h.bandwidth, 1);
            m.insert("per_transfer_bw".into(), h.per_tile);
            m
        }
        Scenario::MemoryRead { width_bits } => {
            let bw = match width_bits {
                None => memory_ceiling(topo, params, Direction::Read),
                Some(w) => {
                    let threads = params.costs.memory.threads_max;
                    params.memory_read_bandwidth(topo, *w, None, threads)?.chip
                }
            };
            one("bandwidth", bw)
        }
        Scenario::MemoryLatency => {
            let l = params.memory_latency(topo);
            Metrics::from([
                ("latency_ns".to_string(), l.time.as_ns()),
                ("latency_cycles".to_string(), l.cycles as f64),
            ])
        }
        Scenario::Compute { precision, unit } => one(
            "flops",
            compute_ceiling(topo, params, *precision, *unit)?.chip_flops,
        ),
        Scenario::MemoryCeiling(d) => one("bandwidth", memory_ceiling(topo, params, *d)),
        Scenario::GemmEffective(p) => {
            let n = gemm_max_n(topo, params, *p)?;
            one(
                "flops",
                gemm_upper_bound(topo, params, n, *p)?.effective_flops,
            )
        }
        Scenario::GemmMaxN(p) => one("max_n", gemm_max_n(topo, params, *p)? as f64),
        Scenario::HopCalibration => {
            let golden = ctx.golden.ok_or_else(|| {
                Error::Golden("hop calibration needs the golden latency matrix".into())
            })?;
            let samples: Vec<(usize, f64)> = golden
                .hop_samples
                .iter()
                .map(|s| (s.hops, s.latency_ns))
                .collect();
            let fit = calibrate_hop_line(&samples)?;
            Metrics::from([
                ("per_hop_ns".to_string(), fit.per_hop_ns),
                ("base_ns".to_string(), fit.base_ns),
            ])
        }
    })
}

//! Superstep execution: compute, then one personalized exchange, then a
//! barrier. Contention inside the exchange is resolved in one shot: every
//! message sees the load of the whole step for its whole lifetime.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cost_model::{CostParams, Flow, LoadContext, TransferPath};
use crate::error::{Error, Result};
use crate::topology::{Hop, TileId, Topology};
use crate::units::Time;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Message {
    pub src: TileId,
    pub dst: TileId,
    pub bytes: u64,
    /// Deliveries of one multicast payload share a group id; the payload is
    /// then held once at the source and carried once per link.
    pub group: Option<u64>,
}

impl Message {
    pub fn new(src: TileId, dst: TileId, bytes: u64) -> Self {
        Message {
            src,
            dst,
            bytes,
            group: None,
        }
    }

    pub fn multicast(src: TileId, dst: TileId, bytes: u64, group: u64) -> Self {
        Message {
            group: Some(group),
            ..Message::new(src, dst, bytes)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Superstep {
    pub compute_ns_per_tile: BTreeMap<TileId, Time>,
    pub messages: Vec<Message>,
}

impl Superstep {
    pub fn exchange(messages: Vec<Message>) -> Self {
        Superstep {
            compute_ns_per_tile: BTreeMap::new(),
            messages,
        }
    }

    /// Adds `t` to the tile's compute time.
    pub fn add_compute(&mut self, tile: TileId, t: Time) {
        *self.compute_ns_per_tile.entry(tile).or_default() += t;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferRecord {
    /// Position in the step's canonical message order (sorted by
    /// source, destination, size and group).
    pub id: usize,
    pub message: Message,
    pub start: Time,
    pub end: Time,
    pub latency: Time,
    /// Fair-share streaming rate, bytes/s.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperstepTrace {
    pub start: Time,
    pub compute_end: Time,
    pub exchange_end: Time,
    pub barrier_end: Time,
    /// Bytes each directed inter-processor hop carries, one copy per message.
    pub per_edge_bytes: BTreeMap<Hop, u64>,
    pub per_transfer: Vec<TransferRecord>,
}

impl SuperstepTrace {
    pub fn span(&self) -> Time {
        self.barrier_end - self.start
    }

    pub fn exchange_span(&self) -> Time {
        self.exchange_end - self.compute_end
    }

    /// Sum of the streaming rates of all transfers in the step.
    pub fn aggregate_rate(&self) -> f64 {
        self.per_transfer.iter().map(|r| r.rate).sum()
    }

    pub fn bytes_sent(&self) -> u64 {
        self.per_transfer.iter().map(|r| r.message.bytes).sum()
    }

    pub fn summary(&self) -> TraceSummary {
        TraceSummary {
            start_ns: self.start.as_ns(),
            compute_end_ns: self.compute_end.as_ns(),
            exchange_end_ns: self.exchange_end.as_ns(),
            barrier_end_ns: self.barrier_end.as_ns(),
            messages: self.per_transfer.len(),
            bytes: self.bytes_sent(),
            aggregate_rate: self.aggregate_rate(),
            edges: self
                .per_edge_bytes
                .iter()
                .map(|(h, &bytes)| EdgeLoad {
                    from: h.from,
                    to: h.to,
                    kind: h.kind.name(),
                    bytes,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSummary {
    pub start_ns: f64,
    pub compute_end_ns: f64,
    pub exchange_end_ns: f64,
    pub barrier_end_ns: f64,
    pub messages: usize,
    pub bytes: u64,
    pub aggregate_rate: f64,
    pub edges: Vec<EdgeLoad>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeLoad {
    pub from: usize,
    pub to: usize,
    pub kind: &'static str,
    pub bytes: u64,
}

/// Checks that every tile can hold what it sends and receives in the step.
/// A multicast payload counts once at its source.
pub fn check_capacity(topology: &Topology, messages: &[Message]) -> Result<()> {
    let mut use_: HashMap<TileId, u64> = HashMap::new();
    let mut seen_groups = std::collections::HashSet::new();
    for m in messages {
        let fresh = match m.group {
            Some(g) => seen_groups.insert((m.src, g)),
            None => true,
        };
        if fresh {
            *use_.entry(m.src).or_default() += m.bytes;
        }
        *use_.entry(m.dst).or_default() += m.bytes;
    }
    let usable = topology.usable_memory_per_tile;
    match use_.into_iter().filter(|&(_, b)| b > usable).min() {
        Some((tile, needed)) => Err(Error::CapacityExceeded {
            tile: topology.global_index(tile),
            needed,
            usable,
        }),
        None => Ok(()),
    }
}

pub fn run_superstep(
    topology: &Topology,
    params: &CostParams,
    step: &Superstep,
) -> Result<SuperstepTrace> {
    run_superstep_at(topology, params, step, Time::ZERO)
}

fn run_superstep_at(
    topology: &Topology,
    params: &CostParams,
    step: &Superstep,
    start: Time,
) -> Result<SuperstepTrace> {
    for &t in step.compute_ns_per_tile.keys() {
        topology.check_tile(t)?;
    }
    let mut messages = step.messages.clone();
    messages.sort_unstable();
    check_capacity(topology, &messages)?;

    let compute_end = start
        + step
            .compute_ns_per_tile
            .values()
            .copied()
            .max()
            .unwrap_or_default();

    let paths = messages
        .iter()
        .map(|m| TransferPath::new(topology, m.src, m.dst))
        .collect::<Result<Vec<_>>>()?;
    let flows: Vec<Flow<'_>> = paths
        .iter()
        .zip(&messages)
        .map(|(path, m)| Flow {
            path,
            group: m.group,
        })
        .collect();
    let load = LoadContext::from_flows(params, &flows)?;

    let mut per_edge_bytes = BTreeMap::new();
    let mut per_transfer = Vec::with_capacity(messages.len());
    let mut exchange_end = compute_end;
    for (id, (m, path)) in messages.iter().zip(&paths).enumerate() {
        let latency = params.p2p_latency(path, &load)?;
        let rate = params.transfer_bandwidth(path, m.bytes, &load)?.streaming;
        let end = compute_end + latency + Time::for_bytes(m.bytes, rate);
        exchange_end = exchange_end.max(end);
        for h in &path.hops {
            *per_edge_bytes.entry(*h).or_default() += m.bytes;
        }
        per_transfer.push(TransferRecord {
            id,
            message: *m,
            start: compute_end,
            end,
            latency,
            rate,
        });
    }

    let barrier = &params.costs.barrier;
    let barrier_ns = if spans_processors(step) {
        barrier.cross_chip_ns
    } else {
        barrier.intra_chip_ns
    };
    Ok(SuperstepTrace {
        start,
        compute_end,
        exchange_end,
        barrier_end: exchange_end + Time::from_ns(barrier_ns),
        per_edge_bytes,
        per_transfer,
    })
}

fn spans_processors(step: &Superstep) -> bool {
    let mut procs = step
        .compute_ns_per_tile
        .keys()
        .copied()
        .chain(step.messages.iter().flat_map(|m| [m.src, m.dst]))
        .map(|t| t.processor_dnc);
    match procs.next() {
        Some(first) => procs.any(|p| p != first),
        None => false,
    }
}

/// Runs steps back to back; each starts at the previous barrier.
pub fn run_program(
    topology: &Topology,
    params: &CostParams,
    steps: &[Superstep],
) -> Result<Vec<SuperstepTrace>> {
    let mut at = Time::ZERO;
    let mut traces = Vec::with_capacity(steps.len());
    for step in steps {
        let trace = run_superstep_at(topology, params, step, at)?;
        at = trace.barrier_end;
        traces.push(trace);
    }
    Ok(traces)
}

pub fn program_span(traces: &[SuperstepTrace]) -> Time {
    traces.iter().map(SuperstepTrace::span).sum()
}

pub fn write_transfers_csv<W: Write>(traces: &[SuperstepTrace], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "step",
        "message_id",
        "src",
        "dst",
        "bytes",
        "start_ns",
        "end_ns",
    ])?;
    for (step, t) in traces.iter().enumerate() {
        for r in &t.per_transfer {
            w.write_record([
                step.to_string(),
                r.id.to_string(),
                r.message.src.to_string(),
                r.message.dst.to_string(),
                r.message.bytes.to_string(),
                format!("{:.3}", r.start.as_ns()),
                format!("{:.3}", r.end.as_ns()),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn summaries_json(traces: &[SuperstepTrace]) -> String {
    let s: Vec<_> = traces.iter().map(SuperstepTrace::summary).collect();
    serde_json::to_string_pretty(&s).expect("trace summaries serialize")
}

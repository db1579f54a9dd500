//! Broadcast, gather, scatter, all-to-all and reduce: message planning,
//! buffer limits and latency/bandwidth prediction.

mod empirical;
mod reduce;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bsp_engine::{run_program, run_superstep, Message, Superstep};
use crate::cost_model::{CollectiveParams, CostParams};
use crate::error::{Error, Result};
use crate::topology::{TileId, Topology};
use crate::units::Time;

pub use empirical::{EmpiricalTable, Lookup, SeriesKey};
pub use reduce::{reduce_compute_time, reduce_plan, ReducePlan, Scaling, OPERAND_BYTES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectiveOp {
    Broadcast,
    Gather,
    Scatter,
    AllToAll,
    Reduce,
}

impl CollectiveOp {
    pub const ALL: [CollectiveOp; 5] = [
        CollectiveOp::Broadcast,
        CollectiveOp::Gather,
        CollectiveOp::Scatter,
        CollectiveOp::AllToAll,
        CollectiveOp::Reduce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CollectiveOp::Broadcast => "broadcast",
            CollectiveOp::Gather => "gather",
            CollectiveOp::Scatter => "scatter",
            CollectiveOp::AllToAll => "all_to_all",
            CollectiveOp::Reduce => "reduce",
        }
    }

    /// Spelling used in experiment ids and golden series.
    pub fn slug(self) -> &'static str {
        match self {
            CollectiveOp::AllToAll => "all-to-all",
            other => other.name(),
        }
    }

    pub fn is_rooted(self) -> bool {
        self != CollectiveOp::AllToAll
    }
}

impl fmt::Display for CollectiveOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CollectiveOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CollectiveOp::ALL
            .into_iter()
            .find(|o| o.name() == s || o.slug() == s)
            .ok_or_else(|| Error::InvalidCollective(format!("unknown operation {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Analytic,
    Empirical,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Mode::Analytic),
            "empirical" => Ok(Mode::Empirical),
            _ => Err(Error::InvalidArgument(format!(
                "mode must be analytic or empirical, got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectiveSpec {
    pub op: CollectiveOp,
    pub root: Option<TileId>,
    /// Sorted, without duplicates.
    pub participants: Vec<TileId>,
    pub message_bytes: u64,
    pub mode: Mode,
}

impl CollectiveSpec {
    /// The root may lie outside `participants`: a broadcast from one
    /// processor into another sends nothing to the root itself.
    pub fn new(
        op: CollectiveOp,
        root: Option<TileId>,
        participants: impl IntoIterator<Item = TileId>,
        message_bytes: u64,
    ) -> Result<Self> {
        let participants: Vec<TileId> = participants
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if participants.is_empty() {
            return Err(Error::NoParticipants);
        }
        if op.is_rooted() != root.is_some() {
            return Err(Error::InvalidCollective(format!(
                "{op} {} a root",
                if op.is_rooted() { "needs" } else { "takes no" }
            )));
        }
        Ok(CollectiveSpec {
            op,
            root,
            participants,
            message_bytes,
            mode: Mode::Analytic,
        })
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn transfer_count(&self) -> usize {
        let n = self.participants.len();
        match self.op {
            CollectiveOp::AllToAll => n * n,
            _ => n,
        }
    }

    pub fn max_message_size(&self, topology: &Topology, params: &CollectiveParams) -> Result<u64> {
        max_message_size(
            self.op,
            self.participants.len(),
            spanned_processors(self.root, &self.participants),
            topology.usable_memory_per_tile,
            params,
        )
    }

    pub fn validate(&self, topology: &Topology, params: &CollectiveParams) -> Result<()> {
        for &t in self.participants.iter().chain(&self.root) {
            topology.check_tile(t)?;
        }
        let max = self.max_message_size(topology, params)?;
        if self.message_bytes > max {
            return Err(Error::MessageTooLarge {
                op: self.op.name(),
                bytes: self.message_bytes,
                max,
                participants: self.participants.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectiveResult {
    pub total_latency: Time,
    pub aggregate_bw: f64,
    pub per_transfer_bw: f64,
    pub transfer_count: usize,
    /// Empirical answer taken from outside the golden hull.
    pub extrapolated: bool,
}

impl CollectiveResult {
    pub fn from_span(total_latency: Time, transfer_count: usize, bytes_per_transfer: u64) -> Self {
        let secs = total_latency.as_secs();
        let aggregate_bw = if secs > 0.0 {
            (transfer_count as u64 * bytes_per_transfer) as f64 / secs
        } else {
            0.0
        };
        CollectiveResult {
            total_latency,
            aggregate_bw,
            per_transfer_bw: aggregate_bw / transfer_count.max(1) as f64,
            transfer_count,
            extrapolated: false,
        }
    }
}

/// Largest message each participant can be given, from the tile's usable
/// memory. Broadcast keeps a send and a receive buffer plus a reserve;
/// all-to-all holds `n` outgoing and `n` incoming blocks. Gather and
/// scatter follow the stored halving ladder, one rung per doubling of the
/// processors spanned, and never exceed an even share of the root tile.
pub fn max_message_size(
    op: CollectiveOp,
    participants: usize,
    processors: usize,
    usable_mem: u64,
    params: &CollectiveParams,
) -> Result<u64> {
    if participants == 0 || processors == 0 {
        return Err(Error::NoParticipants);
    }
    let n = participants as u64;
    Ok(match op {
        CollectiveOp::Broadcast => (usable_mem / 2).saturating_sub(params.broadcast_reserved_bytes),
        CollectiveOp::Gather | CollectiveOp::Scatter => {
            let budget = usable_mem / n;
            let fits = params
                .size_ladder
                .iter()
                .copied()
                .filter(|&s| s <= budget)
                .max();
            let rung = processors.next_power_of_two().trailing_zeros() as usize;
            let scaled = params.size_ladder.get(rung).copied();
            match (fits, scaled) {
                (Some(f), Some(s)) => f.min(s),
                (Some(f), None) => f.min(params.size_ladder.iter().copied().min().unwrap_or(f)),
                (None, _) => budget,
            }
        }
        CollectiveOp::AllToAll => usable_mem / (2 * n),
        CollectiveOp::Reduce => usable_mem,
    })
}

/// Distinct processors touched by the participants and the root.
pub fn spanned_processors(root: Option<TileId>, participants: &[TileId]) -> usize {
    participants
        .iter()
        .chain(&root)
        .map(|t| t.processor_dnc)
        .collect::<BTreeSet<_>>()
        .len()
}

/// The message set of one collective, as a single exchange.
pub fn plan(spec: &CollectiveSpec, topology: &Topology, params: &CostParams) -> Result<Superstep> {
    spec.validate(topology, &params.costs.collectives)?;
    let b = spec.message_bytes;
    let p = &spec.participants;
    let messages = match (spec.op, spec.root) {
        (CollectiveOp::Broadcast, Some(r)) => {
            p.iter().map(|&d| Message::multicast(r, d, b, 0)).collect()
        }
        (CollectiveOp::Scatter, Some(r)) => p.iter().map(|&d| Message::new(r, d, b)).collect(),
        (CollectiveOp::Gather, Some(r)) => p.iter().map(|&s| Message::new(s, r, b)).collect(),
        (CollectiveOp::AllToAll, None) => p
            .iter()
            .flat_map(|&s| p.iter().map(move |&d| Message::new(s, d, b)))
            .collect(),
        (CollectiveOp::Reduce, _) => {
            return Err(Error::InvalidCollective(
                "reduce runs several supersteps, use reduce_plan".into(),
            ))
        }
        _ => unreachable!("root presence checked at construction"),
    };
    Ok(Superstep::exchange(messages))
}

/// Analytic prediction through the engine. For reduce, `message_bytes`
/// is the operand payload per tile.
pub fn predict(
    spec: &CollectiveSpec,
    topology: &Topology,
    params: &CostParams,
) -> Result<CollectiveResult> {
    if spec.mode == Mode::Empirical {
        return Err(Error::InvalidCollective(
            "empirical predictions need a golden table, use EmpiricalTable::predict".into(),
        ));
    }
    if spec.op == CollectiveOp::Reduce {
        let k = (spec.message_bytes / OPERAND_BYTES).max(1);
        let plan = reduce_plan(topology, params, &spec.participants, k, Scaling::Weak)?;
        let span = plan.time(topology, params)?;
        return Ok(CollectiveResult::from_span(
            span,
            spec.participants.len(),
            k * OPERAND_BYTES,
        ));
    }
    let step = plan(spec, topology, params)?;
    let trace = run_superstep(topology, params, &step)?;
    Ok(CollectiveResult::from_span(
        trace.span(),
        spec.transfer_count(),
        spec.message_bytes,
    ))
}

/// Time of a multi-step program.
pub fn program_time(topology: &Topology, params: &CostParams, steps: &[Superstep]) -> Result<Time> {
    Ok(crate::bsp_engine::program_span(&run_program(
        topology, params, steps,
    )?))
}

/// Placement class of a collective, relative to its root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TopologyClass {
    /// Root alone.
    SelfCopy,
    /// Root and participants on one processor.
    OnChip,
    /// All participants on one other processor: 1 neighbour-rung, 2 rail, 3 diagonal.
    Remote(char),
    /// Whole processors spanning several chips.
    System(char),
    Other,
}

impl TopologyClass {
    /// Family name used by the golden tables. Whole-chip (a) rows belong
    /// to the on-chip series.
    pub fn family(self) -> Option<String> {
        match self {
            TopologyClass::SelfCopy => Some("self".into()),
            TopologyClass::OnChip => Some("on-chip".into()),
            TopologyClass::Remote(c) | TopologyClass::System(c) => Some(c.to_string()),
            TopologyClass::Other => None,
        }
    }
}

pub fn classify(
    topology: &Topology,
    root: Option<TileId>,
    participants: &[TileId],
) -> TopologyClass {
    let anchor = root.or(participants.first().copied());
    let Some(anchor) = anchor else {
        return TopologyClass::Other;
    };
    if participants == [anchor] {
        return TopologyClass::SelfCopy;
    }
    let procs: BTreeSet<usize> = participants.iter().map(|t| t.processor_dnc).collect();
    let home = anchor.processor_dnc;
    if procs.len() == 1 && procs.contains(&home) {
        return TopologyClass::OnChip;
    }
    let whole = procs.len() * topology.tiles_per_processor == participants.len();
    if !whole || home != 0 {
        return TopologyClass::Other;
    }
    let list: Vec<usize> = procs.into_iter().collect();
    match list.as_slice() {
        [1] => TopologyClass::Remote('b'),
        [2] => TopologyClass::Remote('c'),
        [3] => TopologyClass::Remote('d'),
        [0, 1] => TopologyClass::System('e'),
        [0, 2] => TopologyClass::System('f'),
        [0, 3] => TopologyClass::System('g'),
        l if l.len() >= 4
            && l.len().is_power_of_two()
            && l.iter().enumerate().all(|(i, &p)| i == p) =>
        {
            TopologyClass::System(match l.len() {
                4 => 'h',
                8 => 'i',
                16 => 'j',
                _ => return TopologyClass::Other,
            })
        }
        _ => TopologyClass::Other,
    }
}

/// Root and participants of a named placement. The root is tile 0 of
/// processor 0. `self` is the root alone, `n<N>` the next N tiles on its
/// processor, `a` the whole processor, `b`–`d` all of processor 1–3, and
/// `e`–`j` all tiles of processor sets {0,1}, {0,2}, {0,3}, 0..3, 0..7,
/// 0..15.
pub fn scenario(topology: &Topology, label: &str) -> Result<(TileId, Vec<TileId>)> {
    let root = TileId::new(0, 0);
    let tpp = topology.tiles_per_processor;
    let procs: &[usize] = match label {
        "self" => return Ok((root, vec![root])),
        "a" => &[0],
        "b" => &[1],
        "c" => &[2],
        "d" => &[3],
        "e" => &[0, 1],
        "f" => &[0, 2],
        "g" => &[0, 3],
        "h" => &[0, 1, 2, 3],
        "i" => &[0, 1, 2, 3, 4, 5, 6, 7],
        "j" => &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15],
        _ => {
            let n: usize = label
                .strip_prefix('n')
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidArgument(format!("unknown placement {label:?}")))?;
            if n == 0 || n >= tpp {
                return Err(Error::InvalidArgument(format!(
                    "placement {label}: on-chip subsets need 1..{tpp} tiles"
                )));
            }
            return Ok((root, (1..=n).map(|t| TileId::new(0, t)).collect()));
        }
    };
    for &p in procs {
        if p >= topology.processor_count() {
            return Err(Error::InvalidArgument(format!(
                "placement {label} needs processor {p}, system has {}",
                topology.processor_count()
            )));
        }
    }
    Ok((
        root,
        procs.iter().flat_map(|&p| topology.tiles_of(p)).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Topology, CostParams) {
        (Topology::reference(), CostParams::reference())
    }

    #[test]
    fn ladder_sizes() {
        let (_, p) = setup();
        let c = &p.costs.collectives;
        let m = |op, n, procs| max_message_size(op, n, procs, 253_952, c).unwrap();
        assert_eq!(m(CollectiveOp::Broadcast, 1216, 1), 100 * 1024);
        assert_eq!(m(CollectiveOp::Gather, 1216, 1), 160);
        // root on processor 0, participants on processor 1
        assert_eq!(m(CollectiveOp::Gather, 1216, 2), 80);
        assert_eq!(m(CollectiveOp::Gather, 2432, 2), 80);
        assert_eq!(m(CollectiveOp::Scatter, 4864, 4), 40);
        assert_eq!(m(CollectiveOp::Scatter, 9728, 8), 20);
        assert_eq!(m(CollectiveOp::Gather, 19456, 16), 4);
        assert_eq!(m(CollectiveOp::Gather, 1, 1), 160);
        // beyond the ladder the smallest rung still applies
        assert_eq!(m(CollectiveOp::Gather, 64, 32), 4);
        assert_eq!(m(CollectiveOp::AllToAll, 608, 1), 208);
        assert!(max_message_size(CollectiveOp::Gather, 0, 1, 1, c).is_err());
        let (t, _) = setup();
        let (root, parts) = scenario(&t, "b").unwrap();
        let spec = CollectiveSpec::new(CollectiveOp::Gather, Some(root), parts, 4).unwrap();
        assert_eq!(spec.max_message_size(&t, c).unwrap(), 80);
    }

    #[test]
    fn message_counts() {
        let (t, p) = setup();
        let (root, parts) = scenario(&t, "n608").unwrap();
        let a2a = CollectiveSpec::new(CollectiveOp::AllToAll, None, parts.clone(), 4).unwrap();
        assert_eq!(plan(&a2a, &t, &p).unwrap().messages.len(), 369_664);
        let one = CollectiveSpec::new(CollectiveOp::AllToAll, None, [root], 4).unwrap();
        let m = plan(&one, &t, &p).unwrap().messages;
        assert_eq!((m.len(), m[0].src, m[0].dst), (1, root, root));
        let (root, parts) = scenario(&t, "j").unwrap();
        let bc = CollectiveSpec::new(CollectiveOp::Broadcast, Some(root), parts, 4).unwrap();
        assert_eq!(plan(&bc, &t, &p).unwrap().messages.len(), 19_456);
    }

    #[test]
    fn oversize_rejected() {
        let (t, p) = setup();
        let (root, parts) = scenario(&t, "a").unwrap();
        let g = CollectiveSpec::new(CollectiveOp::Gather, Some(root), parts, 161).unwrap();
        assert!(matches!(
            plan(&g, &t, &p),
            Err(Error::MessageTooLarge { max: 160, .. })
        ));
        assert!(CollectiveSpec::new(CollectiveOp::Gather, None, [root], 4).is_err());
        assert!(CollectiveSpec::new(CollectiveOp::Gather, Some(root), [], 4).is_err());
    }

    #[test]
    fn analytic_headlines() {
        let (t, p) = setup();
        let run = |op, label: &str, bytes| {
            let (root, parts) = scenario(&t, label).unwrap();
            let spec = CollectiveSpec::new(op, Some(root), parts, bytes).unwrap();
            predict(&spec, &t, &p).unwrap()
        };
        let within = |got: f64, want: f64| (got - want).abs() / want <= 0.25;
        let bc = run(CollectiveOp::Broadcast, "a", 4).total_latency.as_us();
        assert!(within(bc, 0.194), "{bc}");
        let g = run(CollectiveOp::Gather, "j", 4).total_latency.as_us();
        assert!(within(g, 25.159), "{g}");
        let s = run(CollectiveOp::Scatter, "j", 4).total_latency.as_us();
        assert!(within(s, 13.729), "{s}");
        // local copy latency plus 4 bytes at the copy rate
        let own = run(CollectiveOp::Scatter, "self", 4).total_latency.as_ns();
        assert!((own - 12.3125).abs() < 1e-3, "{own}");
    }

    #[test]
    fn classes() {
        let t = Topology::reference();
        let class = |l: &str| {
            let (r, p) = scenario(&t, l).unwrap();
            classify(&t, Some(r), &p)
        };
        assert_eq!(class("self"), TopologyClass::SelfCopy);
        assert_eq!(class("n38"), TopologyClass::OnChip);
        assert_eq!(class("a"), TopologyClass::OnChip);
        assert_eq!(class("c"), TopologyClass::Remote('c'));
        assert_eq!(class("g"), TopologyClass::System('g'));
        assert_eq!(class("j"), TopologyClass::System('j'));
        assert_eq!(
            classify(&t, Some(TileId::new(0, 0)), &[TileId::new(5, 3)]),
            TopologyClass::Other
        );
    }
}

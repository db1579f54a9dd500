//! Machine graph: tiles, processors, boards and the ladder of IPU links.

mod layout;
mod spec;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{GB_PER_S, KIB};

pub use layout::{
    column_position, is_quoted, locus as tile_locus, TileLocus, COLUMN_TABLE, ISLANDS_PER_COLUMN,
    TILES_PER_COLUMN, TILES_PER_ISLAND,
};
pub use spec::{DncMap, LinkSpec, SystemSpec, TopologySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TileId {
    pub processor_dnc: usize,
    pub local_tile: usize,
}

impl TileId {
    pub const fn new(processor_dnc: usize, local_tile: usize) -> Self {
        TileId {
            processor_dnc,
            local_tile,
        }
    }
}

impl fmt::Display for TileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.processor_dnc, self.local_tile)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(dnc: usize) -> Self {
        if dnc % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProcessorIds {
    pub device_id: usize,
    pub dnc_id: usize,
    pub board: usize,
    pub parity: Parity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    LocalMemory,
    OnChipExchange,
    IntraBoardBundle,
    InterBoardRail,
    PassThrough,
    HostPcie,
}

impl LinkKind {
    pub const ALL: [LinkKind; 6] = [
        LinkKind::LocalMemory,
        LinkKind::OnChipExchange,
        LinkKind::IntraBoardBundle,
        LinkKind::InterBoardRail,
        LinkKind::PassThrough,
        LinkKind::HostPcie,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LinkKind::LocalMemory => "local_memory",
            LinkKind::OnChipExchange => "on_chip_exchange",
            LinkKind::IntraBoardBundle => "intra_board_bundle",
            LinkKind::InterBoardRail => "inter_board_rail",
            LinkKind::PassThrough => "pass_through",
            LinkKind::HostPcie => "host_pcie",
        }
    }

    fn index(self) -> usize {
        LinkKind::ALL.iter().position(|&k| k == self).unwrap()
    }
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkClass {
    pub kind: LinkKind,
    /// bytes/s
    pub nominal_bandwidth: f64,
    pub base_latency_ns: f64,
}

/// Physical links in a rung bundle.
pub const RUNG_DATA_LINKS: usize = 2;
pub const RUNG_PASS_THROUGH_LINKS: usize = 1;

/// Undirected inter-processor edge, `a < b`. Rungs carry
/// [`LinkKind::IntraBoardBundle`], rails [`LinkKind::InterBoardRail`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub kind: LinkKind,
}

/// One directed step of a route. A rung step is tagged either as the data
/// bundle or as the pass-through link depending on what the route uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Hop {
    pub from: usize,
    pub to: usize,
    pub kind: LinkKind,
}

impl Hop {
    pub fn is_rung(&self) -> bool {
        matches!(
            self.kind,
            LinkKind::IntraBoardBundle | LinkKind::PassThrough
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairClass {
    SameTile,
    SameIsland,
    SameColumn,
    CrossColumn,
    CrossProcessor,
}

impl PairClass {
    pub fn name(self) -> &'static str {
        match self {
            PairClass::SameTile => "same_tile",
            PairClass::SameIsland => "same_island",
            PairClass::SameColumn => "same_column",
            PairClass::CrossColumn => "cross_column",
            PairClass::CrossProcessor => "cross_processor",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiDevice {
    pub member_dncs: Vec<usize>,
    pub global_tile_count: usize,
    tiles_per_processor: usize,
}

impl MultiDevice {
    /// Tile at `index` in the virtual device's unified numbering.
    pub fn tile(&self, index: usize) -> Result<TileId> {
        if index >= self.global_tile_count {
            return Err(Error::OutOfRange {
                what: "multi-device tile",
                id: index,
                limit: self.global_tile_count,
            });
        }
        Ok(TileId::new(
            self.member_dncs[index / self.tiles_per_processor],
            index % self.tiles_per_processor,
        ))
    }

    pub fn tiles(&self) -> impl Iterator<Item = TileId> + '_ {
        let tpp = self.tiles_per_processor;
        self.member_dncs
            .iter()
            .flat_map(move |&p| (0..tpp).map(move |t| TileId::new(p, t)))
    }

    pub fn contains(&self, dnc: usize) -> bool {
        self.member_dncs.contains(&dnc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub boards: usize,
    pub processors: Vec<ProcessorIds>,
    pub edges: Vec<Edge>,
    pub tiles_per_processor: usize,
    pub clock_hz: f64,
    pub memory_per_tile: u64,
    pub usable_memory_per_tile: u64,
    links: Vec<LinkClass>,
    device_to_dnc: Vec<usize>,
}

impl Topology {
    pub fn reference() -> Self {
        build_reference_topology(&TopologySpec::reference()).expect("shipped topology is valid")
    }

    pub fn processor_count(&self) -> usize {
        self.processors.len()
    }

    pub fn total_tiles(&self) -> usize {
        self.processors.len() * self.tiles_per_processor
    }

    pub fn columns(&self) -> usize {
        self.tiles_per_processor / TILES_PER_COLUMN
    }

    pub fn link(&self, kind: LinkKind) -> &LinkClass {
        &self.links[kind.index()]
    }

    pub fn board_of(&self, dnc: usize) -> usize {
        dnc / 2
    }

    fn check_dnc(&self, dnc: usize) -> Result<()> {
        if dnc < self.processors.len() {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                what: "dnc id",
                id: dnc,
                limit: self.processors.len(),
            })
        }
    }

    pub fn check_tile(&self, tile: TileId) -> Result<()> {
        self.check_dnc(tile.processor_dnc)?;
        if tile.local_tile < self.tiles_per_processor {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                what: "local tile",
                id: tile.local_tile,
                limit: self.tiles_per_processor,
            })
        }
    }

    pub fn device_to_dnc(&self, device_id: usize) -> Result<usize> {
        self.device_to_dnc
            .get(device_id)
            .copied()
            .ok_or(Error::OutOfRange {
                what: "device id",
                id: device_id,
                limit: self.device_to_dnc.len(),
            })
    }

    pub fn dnc_to_device(&self, dnc_id: usize) -> Result<usize> {
        self.check_dnc(dnc_id)?;
        Ok(self.processors[dnc_id].device_id)
    }

    pub fn global_index(&self, tile: TileId) -> usize {
        tile.processor_dnc * self.tiles_per_processor + tile.local_tile
    }

    pub fn tile_from_global(&self, index: usize) -> Result<TileId> {
        if index >= self.total_tiles() {
            return Err(Error::OutOfRange {
                what: "global tile",
                id: index,
                limit: self.total_tiles(),
            });
        }
        Ok(TileId::new(
            index / self.tiles_per_processor,
            index % self.tiles_per_processor,
        ))
    }

    pub fn hop_distance(&self, a: usize, b: usize) -> Result<usize> {
        self.check_dnc(a)?;
        self.check_dnc(b)?;
        let board_gap = self.board_of(a).abs_diff(self.board_of(b));
        Ok(if a == b {
            0
        } else if board_gap == 0 || a % 2 == b % 2 {
            board_gap.max(1)
        } else {
            board_gap + 1
        })
    }

    /// Shortest route between two processors. Same-board pairs use the
    /// rung's data bundle, same-parity pairs stay on their rail, and all
    /// other pairs cross the pass-through link at the source board first.
    pub fn route(&self, src: usize, dst: usize) -> Result<Vec<Hop>> {
        self.check_dnc(src)?;
        self.check_dnc(dst)?;
        let mut hops = Vec::new();
        if src == dst {
            return Ok(hops);
        }
        let mut at = src;
        if self.board_of(src) == self.board_of(dst) {
            hops.push(Hop {
                from: src,
                to: dst,
                kind: LinkKind::IntraBoardBundle,
            });
            return Ok(hops);
        }
        if src % 2 != dst % 2 {
            let partner = src ^ 1;
            hops.push(Hop {
                from: src,
                to: partner,
                kind: LinkKind::PassThrough,
            });
            at = partner;
        }
        while at != dst {
            let next = if dst > at { at + 2 } else { at - 2 };
            hops.push(Hop {
                from: at,
                to: next,
                kind: LinkKind::InterBoardRail,
            });
            at = next;
        }
        Ok(hops)
    }

    pub fn tile_locus(&self, local_tile: usize) -> Result<TileLocus> {
        if local_tile >= self.tiles_per_processor {
            return Err(Error::OutOfRange {
                what: "local tile",
                id: local_tile,
                limit: self.tiles_per_processor,
            });
        }
        Ok(layout::locus(local_tile))
    }

    pub fn tile_pair_class(&self, a: TileId, b: TileId) -> Result<PairClass> {
        self.check_tile(a)?;
        self.check_tile(b)?;
        if a == b {
            return Ok(PairClass::SameTile);
        }
        if a.processor_dnc != b.processor_dnc {
            return Ok(PairClass::CrossProcessor);
        }
        let (la, lb) = (layout::locus(a.local_tile), layout::locus(b.local_tile));
        Ok(if la.column != lb.column {
            PairClass::CrossColumn
        } else if la.island == lb.island {
            PairClass::SameIsland
        } else {
            PairClass::SameColumn
        })
    }

    pub fn make_multi_device(&self, member_count: usize, anchor_dnc: usize) -> Result<MultiDevice> {
        let n = self.processors.len();
        if member_count == 0 || !member_count.is_power_of_two() || member_count > n {
            return Err(Error::InvalidMultiDevice(format!(
                "member count {member_count} must be a power of two no larger than {n}"
            )));
        }
        if anchor_dnc % member_count != 0 || anchor_dnc + member_count > n {
            return Err(Error::InvalidMultiDevice(format!(
                "anchor {anchor_dnc} is not aligned to {member_count}"
            )));
        }
        Ok(MultiDevice {
            member_dncs: (anchor_dnc..anchor_dnc + member_count).collect(),
            global_tile_count: member_count * self.tiles_per_processor,
            tiles_per_processor: self.tiles_per_processor,
        })
    }

    pub fn tiles_of(&self, dnc: usize) -> impl Iterator<Item = TileId> {
        (0..self.tiles_per_processor).map(move |t| TileId::new(dnc, t))
    }
}

pub fn build_reference_topology(config: &TopologySpec) -> Result<Topology> {
    let sys = &config.system;
    let invalid = |m: String| Err(Error::InvalidTopology(m));
    if sys.boards == 0 {
        return invalid("at least one board is required".into());
    }
    if sys.processors_per_board != 2 {
        return invalid(format!(
            "a ladder needs exactly 2 processors per board, got {}",
            sys.processors_per_board
        ));
    }
    if sys.tiles_per_processor == 0 || sys.tiles_per_processor % TILES_PER_COLUMN != 0 {
        return invalid(format!(
            "tiles per processor ({}) must be a positive multiple of {TILES_PER_COLUMN}",
            sys.tiles_per_processor
        ));
    }
    if !(sys.clock_ghz > 0.0 && sys.clock_ghz.is_finite()) {
        return invalid(format!("clock must be positive, got {} GHz", sys.clock_ghz));
    }
    if sys.usable_mem_per_tile_kib == 0 || sys.usable_mem_per_tile_kib > sys.mem_per_tile_kib {
        return invalid("usable tile memory must be positive and within tile memory".into());
    }

    let n = sys.boards * 2;
    let devices: Vec<usize> = match &config.dnc_map {
        Some(m) => m.devices.clone(),
        None => (0..n).collect(),
    };
    if devices.len() != n {
        return invalid(format!(
            "dnc map lists {} devices for {n} processors",
            devices.len()
        ));
    }
    let mut device_to_dnc = vec![usize::MAX; n];
    for (dnc, &dev) in devices.iter().enumerate() {
        if dev >= n {
            return invalid(format!("device id {dev} out of range for {n} processors"));
        }
        if device_to_dnc[dev] != usize::MAX {
            return invalid(format!("duplicate device id {dev} in dnc map"));
        }
        device_to_dnc[dev] = dnc;
    }

    let mut links = Vec::with_capacity(LinkKind::ALL.len());
    for kind in LinkKind::ALL {
        let Some(l) = config.links.get(kind.name()) else {
            return invalid(format!("missing [links.{}]", kind.name()));
        };
        if !(l.bandwidth_gbps > 0.0) || l.base_latency_ns < 0.0 {
            return invalid(format!(
                "link class {} has non-positive parameters",
                kind.name()
            ));
        }
        links.push(LinkClass {
            kind,
            nominal_bandwidth: l.bandwidth_gbps * GB_PER_S,
            base_latency_ns: l.base_latency_ns,
        });
    }
    if let Some(extra) = config
        .links
        .keys()
        .find(|k| !LinkKind::ALL.iter().any(|kind| kind.name() == k.as_str()))
    {
        return invalid(format!("unknown link class `{extra}`"));
    }

    let processors = (0..n)
        .map(|dnc| ProcessorIds {
            device_id: devices[dnc],
            dnc_id: dnc,
            board: dnc / 2,
            parity: Parity::of(dnc),
        })
        .collect();

    let mut edges: BTreeSet<Edge> = BTreeSet::new();
    for k in 0..sys.boards {
        edges.insert(Edge {
            a: 2 * k,
            b: 2 * k + 1,
            kind: LinkKind::IntraBoardBundle,
        });
    }
    for dnc in 0..n.saturating_sub(2) {
        edges.insert(Edge {
            a: dnc,
            b: dnc + 2,
            kind: LinkKind::InterBoardRail,
        });
    }

    Ok(Topology {
        boards: sys.boards,
        processors,
        edges: edges.into_iter().collect(),
        tiles_per_processor: sys.tiles_per_processor,
        clock_hz: sys.clock_ghz * 1e9,
        memory_per_tile: sys.mem_per_tile_kib * KIB,
        usable_memory_per_tile: sys.usable_mem_per_tile_kib * KIB,
        links,
        device_to_dnc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_shape() {
        let t = Topology::reference();
        assert_eq!(t.processor_count(), 16);
        let rungs = t
            .edges
            .iter()
            .filter(|e| e.kind == LinkKind::IntraBoardBundle)
            .count();
        let rails = t
            .edges
            .iter()
            .filter(|e| e.kind == LinkKind::InterBoardRail)
            .count();
        assert_eq!((rungs, rails), (8, 14));
        assert_eq!(t.total_tiles(), 19_456);
        assert_eq!(t.usable_memory_per_tile, 248 * 1024);
        assert_eq!(t.columns(), 16);
    }

    #[test]
    fn one_board() {
        let t = build_reference_topology(&TopologySpec::with_boards(1)).unwrap();
        assert_eq!(t.processor_count(), 2);
        assert_eq!(t.edges.len(), 1);
        assert_eq!(t.dnc_to_device(1).unwrap(), 1);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = TopologySpec::reference();
        s.system.processors_per_board = 3;
        assert!(build_reference_topology(&s).is_err());

        let mut s = TopologySpec::reference();
        s.dnc_map.as_mut().unwrap().devices[1] = 5;
        let err = build_reference_topology(&s).unwrap_err().to_string();
        assert!(err.contains("duplicate"), "{err}");

        let mut s = TopologySpec::reference();
        s.dnc_map.as_mut().unwrap().devices.pop();
        assert!(build_reference_topology(&s).is_err());

        let mut s = TopologySpec::reference();
        s.system.boards = 0;
        assert!(build_reference_topology(&s).is_err());
    }

    #[test]
    fn id_mapping() {
        let t = Topology::reference();
        assert_eq!(t.dnc_to_device(0).unwrap(), 5);
        assert_eq!(t.device_to_dnc(5).unwrap(), 0);
        assert_eq!(t.device_to_dnc(10).unwrap(), 14);
        assert!(t.device_to_dnc(16).is_err());
        assert!(t.dnc_to_device(16).is_err());
    }

    #[test]
    fn hops_and_routes() {
        let t = Topology::reference();
        assert_eq!(t.hop_distance(0, 0).unwrap(), 0);
        assert_eq!(t.hop_distance(0, 2).unwrap(), 1);
        assert_eq!(t.hop_distance(1, 14).unwrap(), 8);
        assert_eq!(t.hop_distance(0, 14).unwrap(), 7);
        assert_eq!(t.hop_distance(1, 15).unwrap(), 7);

        assert_eq!(
            t.route(0, 1).unwrap(),
            vec![Hop {
                from: 0,
                to: 1,
                kind: LinkKind::IntraBoardBundle
            }]
        );
        assert_eq!(
            t.route(0, 3).unwrap(),
            vec![
                Hop {
                    from: 0,
                    to: 1,
                    kind: LinkKind::PassThrough
                },
                Hop {
                    from: 1,
                    to: 3,
                    kind: LinkKind::InterBoardRail
                },
            ]
        );
        let r = t.route(0, 14).unwrap();
        assert_eq!(r.len(), 7);
        assert!(r
            .iter()
            .all(|h| h.kind == LinkKind::InterBoardRail && h.from % 2 == 0));
    }

    #[test]
    fn pair_classes() {
        let t = Topology::reference();
        let a = TileId::new(0, 0);
        assert_eq!(t.tile_pair_class(a, a).unwrap(), PairClass::SameTile);
        assert_eq!(
            t.tile_pair_class(a, TileId::new(0, 1)).unwrap(),
            PairClass::SameIsland
        );
        assert_eq!(
            t.tile_pair_class(a, TileId::new(0, 75)).unwrap(),
            PairClass::SameIsland
        );
        assert_eq!(
            t.tile_pair_class(a, TileId::new(0, 2)).unwrap(),
            PairClass::SameColumn
        );
        assert_eq!(
            t.tile_pair_class(a, TileId::new(0, 644)).unwrap(),
            PairClass::CrossColumn
        );
        assert_eq!(
            t.tile_pair_class(a, TileId::new(1, 0)).unwrap(),
            PairClass::CrossProcessor
        );
        assert!(t.tile_pair_class(a, TileId::new(0, 1216)).is_err());
    }

    #[test]
    fn multi_devices() {
        let t = Topology::reference();
        let m = t.make_multi_device(2, 0).unwrap();
        assert_eq!(m.member_dncs, vec![0, 1]);
        let devs: Vec<_> = m
            .member_dncs
            .iter()
            .map(|&d| t.dnc_to_device(d).unwrap())
            .collect();
        assert_eq!(devs, vec![5, 7]);
        let all = t.make_multi_device(16, 0).unwrap();
        assert_eq!(all.global_tile_count, 19_456);
        assert_eq!(all.tile(1216).unwrap(), TileId::new(1, 0));
        assert!(t.make_multi_device(4, 2).is_err());
        assert!(t.make_multi_device(3, 0).is_err());
    }
}

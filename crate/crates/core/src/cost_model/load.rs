//! Resources a transfer occupies and the load they see from concurrent traffic.
//!
//! Concurrent streams share each resource's capacity equally (fluid model).
//! For queueing delay a stream contributes the rate it can offer at that
//! point of its path, limited by the resources before it. A stream throttled
//! at its source port therefore barely loads the fabric behind it, while
//! streams that only meet their bottleneck at the destination press on
//! every link along the way.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{Hop, LinkKind, TileId, Topology};

use super::CostParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Resource {
    LocalCopy(TileId),
    TileEgress(TileId),
    Exchange(usize),
    Link(Hop),
    TileIngress(TileId),
}

impl Resource {
    /// Shared fabric, as opposed to a tile's private port.
    pub fn is_fabric(&self) -> bool {
        matches!(self, Resource::Exchange(_) | Resource::Link(_))
    }

    /// Whether a multicast payload occupies this resource once for the whole
    /// group rather than once per destination.
    fn replicated_downstream(&self) -> bool {
        matches!(
            self,
            Resource::LocalCopy(_) | Resource::TileEgress(_) | Resource::Link(_)
        )
    }

    fn reverse(&self) -> Option<Resource> {
        match *self {
            Resource::Link(h) => Some(Resource::Link(Hop {
                from: h.to,
                to: h.from,
                kind: h.kind,
            })),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PathClass {
    SelfCopy,
    OnChip,
    /// Single IPU-link hop of the given kind.
    Direct(LinkKind),
    MultiHop {
        first: LinkKind,
        hops: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TransferPath {
    pub src: TileId,
    pub dst: TileId,
    pub hops: Vec<Hop>,
}

impl TransferPath {
    pub fn new(topology: &Topology, src: TileId, dst: TileId) -> Result<Self> {
        topology.check_tile(src)?;
        topology.check_tile(dst)?;
        Ok(TransferPath {
            src,
            dst,
            hops: topology.route(src.processor_dnc, dst.processor_dnc)?,
        })
    }

    pub fn class(&self) -> Result<PathClass> {
        let cross = self.src.processor_dnc != self.dst.processor_dnc;
        Ok(match (self.hops.first(), self.hops.len()) {
            (None, _) if cross => {
                return Err(Error::EmptyPath {
                    src: self.src.processor_dnc,
                    dst: self.dst.processor_dnc,
                })
            }
            (None, _) if self.src == self.dst => PathClass::SelfCopy,
            (None, _) => PathClass::OnChip,
            (Some(h), 1) => PathClass::Direct(h.kind),
            (Some(h), n) => PathClass::MultiHop {
                first: h.kind,
                hops: n,
            },
        })
    }

    /// Resources in the order data flows through them.
    pub fn resources(&self) -> Result<Vec<Resource>> {
        let mut out = Vec::with_capacity(self.hops.len() + 2);
        match self.class()? {
            PathClass::SelfCopy => out.push(Resource::LocalCopy(self.src)),
            PathClass::OnChip => {
                out.push(Resource::TileEgress(self.src));
                out.push(Resource::Exchange(self.src.processor_dnc));
                out.push(Resource::TileIngress(self.dst));
            }
            _ => {
                out.push(Resource::TileEgress(self.src));
                out.extend(self.hops.iter().map(|&h| Resource::Link(h)));
                out.push(Resource::TileIngress(self.dst));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionMix {
    Mono,
    Bidir,
}

/// One message's path, with an optional multicast payload id shared by all
/// deliveries of the same broadcast.
#[derive(Debug, Clone, Copy)]
pub struct Flow<'a> {
    pub path: &'a TransferPath,
    pub group: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum StreamKey {
    Group(u64),
    Message(usize),
}

#[derive(Debug, Clone, Default)]
pub struct LoadContext {
    pub concurrent_transfers: HashMap<Resource, u32>,
    pub utilization: HashMap<Resource, f64>,
    pub direction_mix: Option<DirectionMix>,
    /// Sum of offered rates per resource, bytes/s, rounded per stream so
    /// the total does not depend on summation order.
    offered: HashMap<Resource, u128>,
}

impl LoadContext {
    pub fn idle() -> Self {
        Self::default()
    }

    pub fn streams(&self, r: &Resource) -> u32 {
        self.concurrent_transfers.get(r).copied().unwrap_or(0)
    }

    pub fn utilization_of(&self, r: &Resource) -> f64 {
        self.utilization.get(r).copied().unwrap_or(0.0)
    }

    pub fn offered(&self, r: &Resource) -> u128 {
        self.offered.get(r).copied().unwrap_or(0)
    }

    pub fn direction_mix(&self) -> DirectionMix {
        self.direction_mix.unwrap_or(DirectionMix::Mono)
    }

    pub fn from_flows(params: &CostParams, flows: &[Flow<'_>]) -> Result<Self> {
        let mut paths = Vec::with_capacity(flows.len());
        let mut members: HashMap<Resource, HashSet<StreamKey>> = HashMap::new();
        for (i, f) in flows.iter().enumerate() {
            let res = f.path.resources()?;
            for r in &res {
                members.entry(*r).or_default().insert(key(r, f.group, i));
            }
            paths.push((res, params.path_peak_bw(&f.path.class()?)));
        }
        let concurrent: HashMap<Resource, u32> =
            members.iter().map(|(r, s)| (*r, s.len() as u32)).collect();

        let mut per_stream: HashMap<(Resource, StreamKey), u64> = HashMap::new();
        for (i, (res, peak)) in paths.iter().enumerate() {
            let mut rate = *peak;
            for r in res {
                let k = (*r, key(r, flows[i].group, i));
                let v = rate.round() as u64;
                per_stream
                    .entry(k)
                    .and_modify(|e| *e = (*e).max(v))
                    .or_insert(v);
                rate = rate.min(params.capacity(r) / concurrent[r] as f64);
            }
        }
        let mut offered: HashMap<Resource, u128> = HashMap::new();
        for ((r, _), v) in per_stream {
            *offered.entry(r).or_default() += v as u128;
        }
        let utilization = offered
            .iter()
            .map(|(r, &o)| (*r, (o as f64 / params.capacity(r)).min(1.0)))
            .collect();
        let bidir = concurrent
            .keys()
            .any(|r| r.reverse().is_some_and(|rev| concurrent.contains_key(&rev)));
        let direction_mix = (!flows.is_empty()).then_some(if bidir {
            DirectionMix::Bidir
        } else {
            DirectionMix::Mono
        });
        Ok(LoadContext {
            concurrent_transfers: concurrent,
            utilization,
            direction_mix,
            offered,
        })
    }

    /// Congestion seen by one stream on `path`, which is assumed to be among
    /// the streams already counted here: the rate offered by every other
    /// stream on the busiest fabric resource of the path, relative to capacity.
    pub fn path_utilization(&self, params: &CostParams, path: &TransferPath) -> Result<f64> {
        let mut rate = params.path_peak_bw(&path.class()?);
        let mut worst: f64 = 0.0;
        for r in path.resources()? {
            let n = self.streams(&r);
            if r.is_fabric() {
                let own = if n > 0 { rate.round() as u128 } else { 0 };
                let others = self.offered(&r).saturating_sub(own);
                worst = worst.max(others as f64 / params.capacity(&r));
            }
            rate = rate.min(params.capacity(&r) / n.max(1) as f64);
        }
        Ok(worst.min(1.0))
    }

    /// Streams on `r` plus, for links, those on the opposite direction.
    pub(crate) fn both_directions(&self, r: &Resource) -> u32 {
        self.streams(r) + r.reverse().map_or(0, |rev| self.streams(&rev))
    }
}

fn key(r: &Resource, group: Option<u64>, index: usize) -> StreamKey {
    match group {
        Some(g) if r.replicated_downstream() => StreamKey::Group(g),
        _ => StreamKey::Message(index),
    }
}

//! Latency and bandwidth predictions from calibrated per-class constants.

mod calibrate;
mod host;
mod load;
mod memory;
mod on_chip;
mod params;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::topology::LinkKind;
use crate::units::{saturation, Time, GB_PER_S};

pub use calibrate::{calibrate_hop_line, HopFit};
pub use host::HostTransfer;
pub use load::{DirectionMix, Flow, LoadContext, PathClass, Resource, TransferPath};
pub use memory::{MemoryBandwidth, MemoryLatency};
pub use on_chip::ColumnShift;
pub use params::{
    BarrierParams, ClassParams, CollectiveParams, CostParams, Costs, HarnessParams, HostParams,
    MemoryParams, MultiHopParams, RooflineParams, TileLatencyParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferBandwidth {
    /// Fair-share rate once setup overhead is amortized, bytes/s.
    pub streaming: f64,
    /// `streaming` scaled by the class saturation curve at this size.
    pub per_transfer: f64,
    /// `per_transfer` times the streams sharing the busiest resource, both
    /// directions counted when the traffic is bidirectional.
    pub aggregate: f64,
    pub bottleneck: Option<Resource>,
}

impl CostParams {
    pub fn capacity(&self, r: &Resource) -> f64 {
        match r {
            Resource::LocalCopy(_) => self.costs.local_memory.class_aggregate_cap(),
            Resource::TileEgress(_) | Resource::TileIngress(_) => self.tile_port_bw(),
            Resource::Exchange(_) => self.costs.on_chip_exchange.class_aggregate_cap(),
            Resource::Link(h) => self.class(h.kind).class_aggregate_cap(),
        }
    }

    pub fn path_peak_bw(&self, class: &PathClass) -> f64 {
        match class {
            PathClass::SelfCopy => self.costs.local_memory.per_transfer_peak_bw(),
            PathClass::OnChip => self.costs.on_chip_exchange.per_transfer_peak_bw(),
            PathClass::Direct(k) => self.class(*k).per_transfer_peak_bw(),
            PathClass::MultiHop { .. } => self.costs.multi_hop.per_transfer_peak_gbps * GB_PER_S,
        }
    }

    fn path_half_saturation(&self, class: &PathClass) -> f64 {
        match class {
            PathClass::SelfCopy => self.costs.local_memory.half_saturation_bytes,
            PathClass::OnChip => self.costs.on_chip_exchange.half_saturation_bytes,
            PathClass::Direct(k) => self.class(*k).half_saturation_bytes,
            PathClass::MultiHop { .. } => self.costs.multi_hop.half_saturation_bytes,
        }
    }

    fn path_multiplier(&self, class: &PathClass) -> f64 {
        match class {
            PathClass::SelfCopy => self.costs.local_memory.loaded_latency_multiplier,
            PathClass::OnChip => self.costs.on_chip_exchange.loaded_latency_multiplier,
            PathClass::Direct(k) => self.class(*k).loaded_latency_multiplier,
            PathClass::MultiHop { .. } => self.costs.multi_hop.loaded_latency_multiplier,
        }
    }

    pub fn no_load_latency_ns(&self, class: &PathClass) -> f64 {
        match class {
            PathClass::SelfCopy => self.costs.local_memory.base_latency_ns,
            PathClass::OnChip => self.costs.on_chip_exchange.base_latency_ns,
            PathClass::Direct(k) => self.class(*k).base_latency_ns,
            PathClass::MultiHop { first, hops } => {
                self.class(*first).base_latency_ns
                    + self.costs.per_hop_latency_ns * (*hops as f64 - 1.0)
            }
        }
    }

    /// Minimum-size message latency. Idle, this is the first hop's class
    /// latency plus the per-hop cost for each further hop. Under load it
    /// grows linearly with the path's utilization up to the class's
    /// full-load multiplier.
    pub fn p2p_latency(&self, path: &TransferPath, load: &LoadContext) -> Result<Time> {
        let class = path.class()?;
        let idle = self.no_load_latency_ns(&class);
        let u = load.path_utilization(self, path)?;
        let m = self.path_multiplier(&class);
        Ok(Time::from_ns(idle * (1.0 + (m - 1.0) * u)))
    }

    pub fn transfer_bandwidth(
        &self,
        path: &TransferPath,
        size_bytes: u64,
        load: &LoadContext,
    ) -> Result<TransferBandwidth> {
        let class = path.class()?;
        let mut streaming = self.path_peak_bw(&class);
        let mut bottleneck = None;
        let mut sharers = 1;
        for r in path.resources()? {
            let n = load.streams(&r).max(1);
            let share = self.capacity(&r) / n as f64;
            if share < streaming {
                streaming = share;
                bottleneck = Some(r);
            }
            let both = match load.direction_mix() {
                DirectionMix::Bidir => load.both_directions(&r),
                DirectionMix::Mono => n,
            };
            sharers = sharers.max(both);
        }
        let per_transfer =
            streaming * saturation(size_bytes as f64, self.path_half_saturation(&class));
        Ok(TransferBandwidth {
            streaming,
            per_transfer,
            aggregate: per_transfer * sharers as f64,
            bottleneck,
        })
    }

    pub fn is_ipu_link(kind: LinkKind) -> bool {
        matches!(
            kind,
            LinkKind::IntraBoardBundle | LinkKind::InterBoardRail | LinkKind::PassThrough
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{TileId, Topology};

    fn setup() -> (Topology, CostParams) {
        (Topology::reference(), CostParams::reference())
    }

    fn path(t: &Topology, a: (usize, usize), b: (usize, usize)) -> TransferPath {
        TransferPath::new(t, TileId::new(a.0, a.1), TileId::new(b.0, b.1)).unwrap()
    }

    #[test]
    fn no_load_latencies() {
        let (t, p) = setup();
        let idle = LoadContext::idle();
        let ns = |a, b| p.p2p_latency(&path(&t, a, b), &idle).unwrap().as_ns();
        assert_eq!(ns((0, 0), (0, 1)), 133.0);
        assert_eq!(ns((0, 0), (1, 0)), 633.0);
        assert_eq!(ns((0, 0), (2, 0)), 524.0);
        assert_eq!(ns((0, 0), (3, 0)), 779.0);
        assert_eq!(ns((0, 0), (4, 0)), 684.0);
        assert_eq!(ns((0, 5), (0, 5)), 12.0);
        let far = ns((1, 0), (14, 0));
        assert!((far - 1760.0).abs() / 1760.0 < 0.10, "{far}");
    }

    #[test]
    fn empty_path_rejected() {
        let p = CostParams::reference();
        let bogus = TransferPath {
            src: TileId::new(0, 0),
            dst: TileId::new(3, 0),
            hops: vec![],
        };
        assert!(p.p2p_latency(&bogus, &LoadContext::idle()).is_err());
    }

    #[test]
    fn full_load_indirect() {
        let (t, p) = setup();
        let paths: Vec<_> = (0..1216)
            .map(|i| path(&t, (0, i), (3, (i * 7) % 1216)))
            .collect();
        let flows: Vec<_> = paths
            .iter()
            .map(|p| Flow {
                path: p,
                group: None,
            })
            .collect();
        let load = LoadContext::from_flows(&p, &flows).unwrap();
        let lat = p.p2p_latency(&paths[0], &load).unwrap().as_ns();
        assert!((lat - 5989.0).abs() < 0.5, "{lat}");
        let bw = p.transfer_bandwidth(&paths[0], 1 << 20, &load).unwrap();
        assert!((bw.streaming * 1216.0 - 27.71e9).abs() < 1e3);
    }

    #[test]
    fn on_chip_aggregate() {
        let (t, p) = setup();
        let paths: Vec<_> = (0..1216)
            .map(|i| path(&t, (0, i), (0, (i + 1) % 1216)))
            .collect();
        let flows: Vec<_> = paths
            .iter()
            .map(|p| Flow {
                path: p,
                group: None,
            })
            .collect();
        let load = LoadContext::from_flows(&p, &flows).unwrap();
        let bw = p.transfer_bandwidth(&paths[0], u64::MAX, &load).unwrap();
        assert!((bw.streaming - 7679.01e9 / 1216.0).abs() < 1.0);
        assert!((bw.aggregate - 7679.01e9).abs() / 7679.01e9 < 1e-9);
        assert_eq!(bw.bottleneck, Some(Resource::Exchange(0)));
    }

    #[test]
    fn zero_size_zero_bandwidth() {
        let (t, p) = setup();
        let bw = p
            .transfer_bandwidth(&path(&t, (0, 0), (1, 0)), 0, &LoadContext::idle())
            .unwrap();
        assert_eq!(bw.per_transfer, 0.0);
        assert_eq!(bw.streaming, 5.46e9);
    }
}

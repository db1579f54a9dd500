//! Host-to-processor transfers over the PCIe switch hierarchy.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{TileId, Topology};
use crate::units::{saturation, Time, GB_PER_S};

use super::CostParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostTransfer {
    pub latency: Time,
    /// Aggregate bytes/s over all destination processors.
    pub bandwidth: f64,
    pub per_tile: f64,
    pub tiles: usize,
}

impl CostParams {
    /// `bytes_per_tile` is written to each destination tile. Each processor
    /// is limited by its port, derated when it shares a switch with another
    /// active processor; switch and system caps apply on top.
    pub fn host_transfer(
        &self,
        topology: &Topology,
        bytes_per_tile: u64,
        dest: &[TileId],
    ) -> Result<HostTransfer> {
        if dest.is_empty() {
            return Err(Error::EmptyDestination);
        }
        let h = &self.costs.host;
        let mut tiles_per_proc: BTreeMap<usize, u64> = BTreeMap::new();
        for &t in dest {
            topology.check_tile(t)?;
            *tiles_per_proc.entry(t.processor_dnc).or_default() += 1;
        }
        let mut per_switch: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for (&p, &n) in &tiles_per_proc {
            let bytes = n * bytes_per_tile;
            per_switch
                .entry(p / h.processors_per_switch)
                .or_default()
                .push(saturation(bytes as f64, h.half_saturation_bytes));
        }
        let system: f64 = per_switch
            .values()
            .map(|sats| {
                let port = if sats.len() > 1 {
                    h.shared_port_gbps
                } else {
                    h.port_gbps
                };
                let raw: f64 = sats.iter().map(|s| s * port * GB_PER_S).sum();
                raw.min(h.switch_cap_gbps * GB_PER_S)
            })
            .sum();
        let bandwidth = system.min(h.system_cap_gbps * GB_PER_S);
        Ok(HostTransfer {
            latency: Time::from_ns(h.latency_ns),
            bandwidth,
            per_tile: bandwidth / dest.len() as f64,
            tiles: dest.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn whole(t: &Topology, dncs: &[usize]) -> Vec<TileId> {
        dncs.iter().flat_map(|&d| t.tiles_of(d)).collect()
    }

    #[test]
    fn bandwidth_hierarchy() {
        let t = Topology::reference();
        let p = CostParams::reference();
        let bw = |d: &[usize]| {
            p.host_transfer(&t, 40_000, &whole(&t, d))
                .unwrap()
                .bandwidth
                / 1e9
        };
        let cases: [(&[usize], f64); 5] = [
            (&[0], 5.86),
            (&[0, 1], 11.35),
            (&[0, 1, 2, 3], 13.78),
            (&[0, 1, 2, 3, 4, 5, 6, 7], 27.55),
            (&(0..16).collect::<Vec<_>>(), 55.04),
        ];
        for (d, want) in cases {
            let got = bw(d);
            assert!((got - want).abs() / want < 0.03, "{d:?}: {got} vs {want}");
        }
    }

    #[test]
    fn latency_flat() {
        let t = Topology::reference();
        let p = CostParams::reference();
        for d in 0..16 {
            let h = p.host_transfer(&t, 4, &[TileId::new(d, 0)]).unwrap();
            assert_eq!(h.latency.as_ns(), 8810.0);
        }
        assert!(p.host_transfer(&t, 4, &[]).is_err());
    }
}

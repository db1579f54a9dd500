use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::Topology;
use crate::units::{saturation, Time};

use super::CostParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryBandwidth {
    pub per_tile: f64,
    pub chip: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryLatency {
    pub cycles: u32,
    pub time: Time,
}

impl CostParams {
    pub fn peak_read_bw_per_tile(&self, topology: &Topology) -> f64 {
        self.costs.memory.read_bytes_per_cycle as f64 * topology.clock_hz
    }

    pub fn peak_write_bw_per_tile(&self, topology: &Topology) -> f64 {
        self.costs.memory.write_bytes_per_cycle as f64 * topology.clock_hz
    }

    pub fn block_saturation(&self, block_bytes: Option<u64>) -> f64 {
        match block_bytes {
            None => 1.0,
            Some(b) => saturation(b as f64, self.costs.memory.block_half_sat_bytes()),
        }
    }

    /// Sustained read bandwidth. `None` stands for blocks large enough that
    /// per-block overhead vanishes.
    pub fn memory_read_bandwidth(
        &self,
        topology: &Topology,
        width_bits: u32,
        block_bytes: Option<u64>,
        threads: u32,
    ) -> Result<MemoryBandwidth> {
        let m = &self.costs.memory;
        let fraction = m.width_fraction(width_bits)?;
        if threads == 0 || threads > m.threads_max {
            return Err(Error::InvalidThreads {
                threads,
                max: m.threads_max,
            });
        }
        let per_tile = self.peak_read_bw_per_tile(topology)
            * fraction
            * (threads as f64 / m.threads_max as f64)
            * self.block_saturation(block_bytes);
        Ok(MemoryBandwidth {
            per_tile,
            chip: per_tile * topology.tiles_per_processor as f64,
        })
    }

    /// Load-to-use latency; independent of address pattern, stride or size.
    pub fn memory_latency(&self, topology: &Topology) -> MemoryLatency {
        let cycles = self.costs.memory.latency_cycles;
        MemoryLatency {
            cycles,
            time: Time::from_secs(cycles as f64 / topology.clock_hz),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::TopologySpec;

    #[test]
    fn table_rows() {
        let t = Topology::reference();
        let p = CostParams::reference();
        let chip = |w, th| p.memory_read_bandwidth(&t, w, None, th).unwrap().chip / 1e12;
        assert!((chip(128, 6) - 30.70).abs() / 30.70 < 0.02);
        assert!((chip(64, 6) - 15.26).abs() / 15.26 < 0.02);
        assert!((chip(32, 6) - 7.59).abs() / 7.59 < 0.02);
        assert!((chip(64, 3) - 15.26 / 2.0).abs() / 7.63 < 0.02);
        assert!(p.memory_read_bandwidth(&t, 16, None, 6).is_err());
        assert!(p.memory_read_bandwidth(&t, 64, None, 7).is_err());
    }

    #[test]
    fn anchor_and_latency() {
        let p = CostParams::reference();
        assert!((p.block_saturation(Some(8192)) - 0.95).abs() < 1e-9);
        let t = Topology::reference();
        assert_eq!(p.memory_latency(&t).time.as_ns(), 3.75);
        let slow = crate::topology::build_reference_topology(
            &TopologySpec::reference().with_clock_ghz(1.0),
        )
        .unwrap();
        assert_eq!(p.memory_latency(&slow).time.as_ns(), 6.0);
    }
}

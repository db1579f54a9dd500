//! Compute and memory ceilings, and a time bound for square matrix products.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cost_model::CostParams;
use crate::error::{Error, Result};
use crate::topology::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    Single,
    /// Half-precision inputs with single-precision accumulation.
    Mixed,
}

impl Precision {
    pub fn element_bytes(self) -> u64 {
        match self {
            Precision::Single => 4,
            Precision::Mixed => 2,
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::Single => "single",
            Precision::Mixed => "mixed",
        })
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Precision::Single),
            "mixed" => Ok(Precision::Mixed),
            _ => Err(Error::UnsupportedCombo(format!("unknown precision {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComputeUnit {
    /// Accumulating matrix-product pipeline.
    Amp,
    Vector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComputeCeiling {
    pub precision: Precision,
    pub unit: ComputeUnit,
    pub flops_per_tile_per_cycle: u32,
    pub chip_flops: f64,
}

pub fn compute_ceiling(
    topology: &Topology,
    params: &CostParams,
    precision: Precision,
    unit: ComputeUnit,
) -> Result<ComputeCeiling> {
    let r = &params.roofline;
    let per_cycle = match (precision, unit) {
        (Precision::Single, ComputeUnit::Amp) => r.amp_single_flops_per_cycle,
        (Precision::Mixed, ComputeUnit::Amp) => r.amp_mixed_flops_per_cycle,
        (Precision::Single, ComputeUnit::Vector) => r.vector_single_flops_per_cycle,
        (Precision::Mixed, ComputeUnit::Vector) => r.vector_mixed_flops_per_cycle,
    };
    if per_cycle == 0 {
        return Err(Error::UnsupportedCombo(format!(
            "{precision} precision on the {unit:?} unit has no configured throughput"
        )));
    }
    Ok(ComputeCeiling {
        precision,
        unit,
        flops_per_tile_per_cycle: per_cycle,
        chip_flops: topology.tiles_per_processor as f64 * topology.clock_hz * per_cycle as f64,
    })
}

/// Chip-wide local memory bandwidth, bytes/s.
pub fn memory_ceiling(topology: &Topology, params: &CostParams, direction: Direction) -> f64 {
    let per_tile = match direction {
        Direction::Read => params.peak_read_bw_per_tile(topology),
        Direction::Write => params.peak_write_bw_per_tile(topology),
    };
    per_tile * topology.tiles_per_processor as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GemmBound {
    pub n: u64,
    pub precision: Precision,
    pub flops: f64,
    /// At the compute ceiling, seconds.
    pub ideal_secs: f64,
    /// At the configured measured efficiency, seconds.
    pub effective_secs: f64,
    pub effective_flops: f64,
    /// Whether the three operands and the library's working space fit in
    /// usable tile memory.
    pub feasible: bool,
}

pub fn gemm_upper_bound(
    topology: &Topology,
    params: &CostParams,
    n: u64,
    precision: Precision,
) -> Result<GemmBound> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "matrix size must be positive".into(),
        ));
    }
    let r = &params.roofline;
    let ceiling = compute_ceiling(topology, params, precision, ComputeUnit::Amp)?.chip_flops;
    let (eta, factor) = match precision {
        Precision::Single => (r.efficiency_single, r.workspace_factor_single),
        Precision::Mixed => (r.efficiency_mixed, r.workspace_factor_mixed),
    };
    let flops = 2.0 * (n as f64).powi(3);
    let capacity = (topology.usable_memory_per_tile * topology.tiles_per_processor as u64) as f64;
    let footprint = 3.0 * (n * n * precision.element_bytes()) as f64 * factor;
    Ok(GemmBound {
        n,
        precision,
        flops,
        ideal_secs: flops / ceiling,
        effective_secs: flops / (ceiling * eta),
        effective_flops: ceiling * eta,
        feasible: footprint <= capacity,
    })
}

/// Largest feasible square size.
pub fn gemm_max_n(topology: &Topology, params: &CostParams, precision: Precision) -> Result<u64> {
    let (mut lo, mut hi) = (0u64, 1u64 << 20);
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if gemm_upper_bound(topology, params, mid, precision)?.feasible {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_reference_topology, TopologySpec};

    #[test]
    fn ceilings() {
        let t = Topology::reference();
        let p = CostParams::reference();
        let c = |pr, u| compute_ceiling(&t, &p, pr, u).unwrap().chip_flops / 1e12;
        assert!((c(Precision::Single, ComputeUnit::Amp) - 31.1296).abs() < 1e-9);
        assert!((c(Precision::Mixed, ComputeUnit::Amp) - 124.5184).abs() < 1e-9);
        assert!((c(Precision::Single, ComputeUnit::Vector) - 7.7824).abs() < 1e-9);
        assert!((memory_ceiling(&t, &p, Direction::Read) - 31.1296e12).abs() < 1.0);
        assert!((memory_ceiling(&t, &p, Direction::Write) - 15.5648e12).abs() < 1.0);
        let half =
            build_reference_topology(&TopologySpec::reference().with_tiles_per_processor(608))
                .unwrap();
        assert!((memory_ceiling(&half, &p, Direction::Read) - 15.5648e12).abs() < 1.0);
    }

    #[test]
    fn gemm() {
        let t = Topology::reference();
        let p = CostParams::reference();
        assert_eq!(gemm_max_n(&t, &p, Precision::Single).unwrap(), 2944);
        assert_eq!(gemm_max_n(&t, &p, Precision::Mixed).unwrap(), 2688);
        assert!(
            !gemm_upper_bound(&t, &p, 3500, Precision::Single)
                .unwrap()
                .feasible
        );
        let g = gemm_upper_bound(&t, &p, 1, Precision::Single).unwrap();
        assert_eq!(g.ideal_secs, 2.0 / 31.1296e12);
        assert!((g.effective_flops / 1e12 - 18.9).abs() < 0.05);
        assert!(gemm_upper_bound(&t, &p, 0, Precision::Single).is_err());
    }
}

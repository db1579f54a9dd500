use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::LinkKind;
use crate::units::GB_PER_S;

/// One link class's calibrated constants, in file units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub base_latency_ns: f64,
    pub loaded_latency_multiplier: f64,
    pub per_transfer_peak_gbps: f64,
    pub aggregate_cap_gbps: f64,
    pub half_saturation_bytes: f64,
}

impl ClassParams {
    pub fn per_transfer_peak_bw(&self) -> f64 {
        self.per_transfer_peak_gbps * GB_PER_S
    }

    pub fn class_aggregate_cap(&self) -> f64 {
        self.aggregate_cap_gbps * GB_PER_S
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiHopParams {
    pub loaded_latency_multiplier: f64,
    pub per_transfer_peak_gbps: f64,
    pub half_saturation_bytes: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HostParams {
    pub latency_ns: f64,
    pub port_gbps: f64,
    pub shared_port_gbps: f64,
    pub processors_per_switch: usize,
    pub switch_cap_gbps: f64,
    pub system_cap_gbps: f64,
    pub half_saturation_bytes: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryParams {
    pub read_bytes_per_cycle: u32,
    pub write_bytes_per_cycle: u32,
    pub latency_cycles: u32,
    pub threads_max: u32,
    pub width_fraction_32: f64,
    pub width_fraction_64: f64,
    pub width_fraction_128: f64,
    pub block_anchor_bytes: u64,
    pub block_anchor_fraction: f64,
}

impl MemoryParams {
    pub fn width_fraction(&self, width_bits: u32) -> Result<f64> {
        match width_bits {
            32 => Ok(self.width_fraction_32),
            64 => Ok(self.width_fraction_64),
            128 => Ok(self.width_fraction_128),
            w => Err(Error::UnsupportedWidth(w)),
        }
    }

    /// s0 such that the saturation curve passes through the anchor point.
    pub fn block_half_sat_bytes(&self) -> f64 {
        let f = self.block_anchor_fraction;
        self.block_anchor_bytes as f64 * (1.0 - f) / f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TileLatencyParams {
    pub intra_column_base_cycles: u32,
    pub per_island_cycles: u32,
    pub toward_left_cycles_per_column: u32,
    pub toward_right_cycles_per_column: u32,
    pub mirror_column_cycles: u32,
    pub max_cycles: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BarrierParams {
    pub intra_chip_ns: f64,
    pub cross_chip_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectiveParams {
    pub broadcast_reserved_bytes: u64,
    pub size_ladder: Vec<u64>,
    pub reduce_fixed_ns: f64,
    pub reduce_per_operand_ns: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RooflineParams {
    pub amp_single_flops_per_cycle: u32,
    pub amp_mixed_flops_per_cycle: u32,
    pub vector_single_flops_per_cycle: u32,
    pub vector_mixed_flops_per_cycle: u32,
    pub efficiency_single: f64,
    pub efficiency_mixed: f64,
    pub workspace_factor_single: f64,
    pub workspace_factor_mixed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarnessParams {
    pub seed: u64,
}

/// The `[costs]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Costs {
    pub per_hop_latency_ns: f64,
    pub tile_port_gbps: f64,
    pub local_memory: ClassParams,
    pub on_chip_exchange: ClassParams,
    pub intra_board_bundle: ClassParams,
    pub inter_board_rail: ClassParams,
    pub pass_through: ClassParams,
    pub multi_hop: MultiHopParams,
    pub host: HostParams,
    pub memory: MemoryParams,
    pub tile_latency: TileLatencyParams,
    #[serde(default)]
    pub barrier: BarrierParams,
    pub collectives: CollectiveParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub costs: Costs,
    pub roofline: RooflineParams,
    pub harness: HarnessParams,
}

impl CostParams {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let p: CostParams =
            toml::from_str(text).map_err(|e| Error::Config(format!("cost params: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn reference() -> Self {
        Self::from_toml_str(crate::REFERENCE_COSTS).expect("shipped cost params parse")
    }

    pub fn class(&self, kind: LinkKind) -> &ClassParams {
        let c = &self.costs;
        match kind {
            LinkKind::LocalMemory => &c.local_memory,
            LinkKind::OnChipExchange => &c.on_chip_exchange,
            LinkKind::IntraBoardBundle => &c.intra_board_bundle,
            LinkKind::InterBoardRail => &c.inter_board_rail,
            LinkKind::PassThrough => &c.pass_through,
            LinkKind::HostPcie => panic!("host transfers are costed by host_transfer"),
        }
    }

    pub fn tile_port_bw(&self) -> f64 {
        self.costs.tile_port_gbps * GB_PER_S
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let c = &self.costs;
        let classes = [
            ("local_memory", &c.local_memory),
            ("on_chip_exchange", &c.on_chip_exchange),
            ("intra_board_bundle", &c.intra_board_bundle),
            ("inter_board_rail", &c.inter_board_rail),
            ("pass_through", &c.pass_through),
        ];
        for (name, k) in classes {
            if !(k.per_transfer_peak_gbps > 0.0 && k.aggregate_cap_gbps > 0.0) {
                return bad(format!("{name}: bandwidths must be positive"));
            }
            if !(k.loaded_latency_multiplier >= 1.0) {
                return bad(format!("{name}: loaded latency multiplier below 1"));
            }
            if !(k.base_latency_ns >= 0.0 && k.half_saturation_bytes >= 0.0) {
                return bad(format!("{name}: negative latency or saturation constant"));
            }
        }
        if !(c.multi_hop.loaded_latency_multiplier >= 1.0
            && c.multi_hop.per_transfer_peak_gbps > 0.0)
        {
            return bad("multi_hop: invalid multiplier or peak".into());
        }
        if !(c.tile_port_gbps > 0.0 && c.per_hop_latency_ns >= 0.0) {
            return bad("tile port bandwidth must be positive".into());
        }
        let h = &c.host;
        if !(h.port_gbps > 0.0
            && h.shared_port_gbps > 0.0
            && h.switch_cap_gbps > 0.0
            && h.system_cap_gbps > 0.0
            && h.processors_per_switch > 0)
        {
            return bad("host: capacities must be positive".into());
        }
        let m = &c.memory;
        for w in [
            m.width_fraction_32,
            m.width_fraction_64,
            m.width_fraction_128,
        ] {
            if !(w > 0.0 && w <= 1.0) {
                return bad(format!("memory width fraction {w} outside (0, 1]"));
            }
        }
        if !(m.block_anchor_fraction > 0.0 && m.block_anchor_fraction < 1.0) || m.threads_max == 0 {
            return bad("memory: anchor fraction must lie in (0, 1)".into());
        }
        if c.collectives.size_ladder.is_empty() {
            return bad("collectives: empty size ladder".into());
        }
        let r = &self.roofline;
        if !(r.efficiency_single > 0.0 && r.efficiency_single <= 1.0)
            || !(r.efficiency_mixed > 0.0 && r.efficiency_mixed <= 1.0)
        {
            return bad("roofline: efficiency outside (0, 1]".into());
        }
        Ok(())
    }
}

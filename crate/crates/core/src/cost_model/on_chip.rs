//! Tile-to-tile latency inside one processor, timed on device without the
//! preceding sync.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{column_position, PairClass, TileId, Topology};
use crate::units::Time;

use super::CostParams;

/// Relative placement of source and destination columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnShift {
    None,
    /// Destination is this many columns nearer the left edge.
    TowardLeft(usize),
    TowardRight(usize),
    /// Facing column on the other side of the exchange.
    Mirror,
}

impl ColumnShift {
    pub fn between(src_column: usize, dst_column: usize, columns: usize) -> Self {
        if src_column == dst_column {
            return ColumnShift::None;
        }
        let (xs, xd) = (
            column_position(src_column, columns),
            column_position(dst_column, columns),
        );
        match xd.cmp(&xs) {
            std::cmp::Ordering::Equal => ColumnShift::Mirror,
            std::cmp::Ordering::Less => ColumnShift::TowardLeft(xs - xd),
            std::cmp::Ordering::Greater => ColumnShift::TowardRight(xd - xs),
        }
    }
}

impl CostParams {
    /// Cycles for a minimum transfer. Depends on the destination island
    /// (distance from the exchange) and, across columns, on direction.
    pub fn tile_pair_latency_cycles(
        &self,
        class: PairClass,
        dst_island: usize,
        shift: ColumnShift,
    ) -> Result<u32> {
        let p = &self.costs.tile_latency;
        let offset = match class {
            PairClass::SameTile | PairClass::CrossProcessor => {
                return Err(Error::NotExchangePair(class.name()))
            }
            PairClass::SameIsland | PairClass::SameColumn => 0,
            PairClass::CrossColumn => match shift {
                ColumnShift::None => 0,
                ColumnShift::Mirror => p.mirror_column_cycles,
                ColumnShift::TowardLeft(d) => p.toward_left_cycles_per_column * d as u32,
                ColumnShift::TowardRight(d) => p.toward_right_cycles_per_column * d as u32,
            },
        };
        let cycles = p.intra_column_base_cycles + p.per_island_cycles * dst_island as u32 + offset;
        Ok(cycles.min(p.max_cycles))
    }

    pub fn tile_latency(
        &self,
        topology: &Topology,
        src: TileId,
        dst: TileId,
    ) -> Result<(u32, Time)> {
        let class = topology.tile_pair_class(src, dst)?;
        let (ls, ld) = (
            topology.tile_locus(src.local_tile)?,
            topology.tile_locus(dst.local_tile)?,
        );
        let shift = ColumnShift::between(ls.column, ld.column, topology.columns());
        let cycles = self.tile_pair_latency_cycles(class, ld.island, shift)?;
        Ok((cycles, Time::from_secs(cycles as f64 / topology.clock_hz)))
    }
}

//! Intra-processor tile placement.
//!
//! Columns hold 76 consecutive tile ids. Inside a column the ids fold back
//! on themselves: the first 38 fill the near side of the islands moving
//! away from the exchange, the last 38 fill the far side moving back, so
//! island 0 of column 0 is {0, 1, 74, 75}. Only that island is quoted; the
//! remaining entries follow from extending the same fold to every island,
//! and are marked as inferred by [`is_quoted`].

use serde::{Deserialize, Serialize};

pub const TILES_PER_COLUMN: usize = 76;
pub const ISLANDS_PER_COLUMN: usize = 19;
pub const TILES_PER_ISLAND: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TileLocus {
    pub column: usize,
    pub island: usize,
    pub slot_in_island: usize,
}

/// (island, slot) for each position in a column.
pub const COLUMN_TABLE: [(u8, u8); TILES_PER_COLUMN] = build_column_table();

const fn build_column_table() -> [(u8, u8); TILES_PER_COLUMN] {
    let mut t = [(0u8, 0u8); TILES_PER_COLUMN];
    let mut p = 0;
    while p < TILES_PER_COLUMN {
        t[p] = if p < TILES_PER_COLUMN / 2 {
            ((p / 2) as u8, (p % 2) as u8)
        } else {
            let q = TILES_PER_COLUMN - 1 - p;
            ((q / 2) as u8, (3 - q % 2) as u8)
        };
        p += 1;
    }
    t
}

/// The one island whose membership is stated outright.
pub fn is_quoted(position: usize) -> bool {
    matches!(position, 0 | 1 | 74 | 75)
}

pub fn locus(local_tile: usize) -> TileLocus {
    let (island, slot) = COLUMN_TABLE[local_tile % TILES_PER_COLUMN];
    TileLocus {
        column: local_tile / TILES_PER_COLUMN,
        island: island as usize,
        slot_in_island: slot as usize,
    }
}

/// Physical distance from the left edge. Columns are numbered up one side
/// of the chip and back down the other, so c and n-1-c sit opposite each other.
pub fn column_position(column: usize, columns: usize) -> usize {
    if column < columns / 2 {
        column
    } else {
        columns - 1 - column
    }
}

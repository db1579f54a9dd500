use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parsed topology description file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub system: SystemSpec,
    #[serde(default)]
    pub links: BTreeMap<String, LinkSpec>,
    #[serde(default)]
    pub dnc_map: Option<DncMap>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub boards: usize,
    #[serde(default = "default_processors_per_board")]
    pub processors_per_board: usize,
    pub tiles_per_processor: usize,
    pub clock_ghz: f64,
    pub mem_per_tile_kib: u64,
    pub usable_mem_per_tile_kib: u64,
}

fn default_processors_per_board() -> usize {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub bandwidth_gbps: f64,
    pub base_latency_ns: f64,
}

/// `devices[k]` is the device id of the processor with DNC id `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DncMap {
    pub devices: Vec<usize>,
}

impl TopologySpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("topology spec: {e}")))
    }

    pub fn reference() -> Self {
        Self::from_toml_str(crate::REFERENCE_TOPOLOGY).expect("shipped topology spec parses")
    }

    /// Reference link classes on a ladder of `boards` boards. The DNC map
    /// is dropped so ids are assigned in physical order, except for the
    /// reference board count where the shipped map is kept.
    pub fn with_boards(boards: usize) -> Self {
        let mut spec = Self::reference();
        if spec.system.boards != boards {
            spec.system.boards = boards;
            spec.dnc_map = None;
        }
        spec
    }

    pub fn with_tiles_per_processor(mut self, tiles: usize) -> Self {
        self.system.tiles_per_processor = tiles;
        self
    }

    pub fn with_clock_ghz(mut self, ghz: f64) -> Self {
        self.system.clock_ghz = ghz;
        self
    }
}

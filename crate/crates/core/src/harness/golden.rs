//! Golden dataset: reference measurements stored as CSV.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::collectives::{EmpiricalTable, SeriesKey};
use crate::error::{Error, Result};

pub const SERIES_FILES: [&str; 8] = [
    "p2p.csv",
    "broadcast.csv",
    "gather.csv",
    "scatter.csv",
    "all_to_all.csv",
    "reduce.csv",
    "host.csv",
    "ipu_latency.csv",
];
pub const SCALAR_FILES: [&str; 2] = ["memory.csv", "roofline.csv"];

pub const SERIES_HEADER: [&str; 9] = [
    "experiment_id",
    "experiment_label",
    "scale_ipus",
    "participants",
    "message_bytes",
    "latency_ns",
    "aggregate_bw",
    "per_transfer_bw",
    "provenance",
];
pub const SCALAR_HEADER: [&str; 5] = ["experiment_id", "metric", "value", "unit", "provenance"];
pub const HOP_HEADER: [&str; 5] = ["src_dnc", "dst_dnc", "hops", "latency_ns", "provenance"];

pub fn reference_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("assets")
        .join("golden")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub experiment_id: String,
    pub experiment_label: String,
    pub scale_ipus: f64,
    pub participants: u64,
    pub message_bytes: Option<u64>,
    pub latency_ns: Option<f64>,
    pub aggregate_bw: Option<f64>,
    pub per_transfer_bw: Option<f64>,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarRow {
    pub experiment_id: String,
    pub metric: String,
    pub value: f64,
    pub unit: String,
    pub provenance: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopSample {
    pub src_dnc: usize,
    pub dst_dnc: usize,
    pub hops: usize,
    pub latency_ns: f64,
}

/// One golden number.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoldenValue {
    pub experiment_id: String,
    pub metric: String,
    pub value: f64,
    pub provenance: String,
}

#[derive(Debug, Clone, Default)]
pub struct GoldenSet {
    pub series: Vec<SeriesRow>,
    pub scalars: Vec<ScalarRow>,
    pub hop_samples: Vec<HopSample>,
}

fn check_header(path: &Path, reader: &mut csv::Reader<std::fs::File>, want: &[&str]) -> Result<()> {
    let got: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if got != want {
        return Err(Error::Golden(format!(
            "{}: schema mismatch, expected columns {want:?}, found {got:?}",
            path.display()
        )));
    }
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let file =
        std::fs::File::open(path).map_err(|e| Error::Golden(format!("{}: {e}", path.display())))?;
    let mut rdr = csv::Reader::from_reader(file);
    check_header(path, &mut rdr, header)?;
    rdr.deserialize()
        .map(|r| r.map_err(|e| Error::Golden(format!("{}: {e}", path.display()))))
        .collect()
}

impl GoldenSet {
    pub fn reference() -> Result<Self> {
        Self::load(reference_dir())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut set = GoldenSet::default();
        for name in SERIES_FILES {
            let path = dir.join(name);
            if name == "ipu_latency.csv" {
                set.hop_samples = load_hop_samples(&path)?;
            } else {
                set.series
                    .extend(read_rows::<SeriesRow>(&path, &SERIES_HEADER)?);
            }
        }
        for name in SCALAR_FILES {
            set.scalars
                .extend(read_rows::<ScalarRow>(&dir.join(name), &SCALAR_HEADER)?);
        }
        set.check_unique()?;
        Ok(set)
    }

    fn check_unique(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for v in self.values() {
            if !seen.insert((v.experiment_id.clone(), v.metric.clone())) {
                return Err(Error::Golden(format!(
                    "duplicate golden value {} / {}",
                    v.experiment_id, v.metric
                )));
            }
        }
        Ok(())
    }

    /// Every golden number, flattened.
    pub fn values(&self) -> Vec<GoldenValue> {
        let mut out = Vec::new();
        for r in &self.series {
            for (metric, v) in [
                ("latency_ns", r.latency_ns),
                ("aggregate_bw", r.aggregate_bw),
                ("per_transfer_bw", r.per_transfer_bw),
            ] {
                if let Some(value) = v {
                    out.push(GoldenValue {
                        experiment_id: r.experiment_id.clone(),
                        metric: metric.into(),
                        value,
                        provenance: r.provenance.clone(),
                    });
                }
            }
        }
        for s in &self.scalars {
            out.push(GoldenValue {
                experiment_id: s.experiment_id.clone(),
                metric: s.metric.clone(),
                value: s.value,
                provenance: s.provenance.clone(),
            });
        }
        out
    }

    pub fn by_experiment(&self) -> BTreeMap<String, Vec<GoldenValue>> {
        let mut m: BTreeMap<String, Vec<GoldenValue>> = BTreeMap::new();
        for v in self.values() {
            m.entry(v.experiment_id.clone()).or_default().push(v);
        }
        m
    }

    pub fn experiment_ids(&self) -> Vec<String> {
        self.by_experiment().into_keys().collect()
    }

    pub fn series_row(&self, id: &str) -> Option<&SeriesRow> {
        self.series.iter().find(|r| r.experiment_id == id)
    }

    /// Interpolation table over every golden number. A series row joins the
    /// series named by its id minus the trailing placement and minus the
    /// metric word, so latency and bandwidth rows of one operation share an
    /// operation key. Scalar rows are single-knot series.
    pub fn empirical_table(&self) -> Result<EmpiricalTable> {
        let mut table = EmpiricalTable::new();
        for r in &self.series {
            let (op, family, bytes) = series_key_parts(r);
            for (metric, v) in [
                ("latency_ns", r.latency_ns),
                ("aggregate_bw", r.aggregate_bw),
                ("per_transfer_bw", r.per_transfer_bw),
            ] {
                if let Some(value) = v {
                    table.insert(
                        SeriesKey::new(&op, metric, &family, bytes),
                        r.participants,
                        value,
                    )?;
                }
            }
        }
        for s in &self.scalars {
            table.insert(
                SeriesKey::new(&s.experiment_id, &s.metric, "", 0),
                1,
                s.value,
            )?;
        }
        Ok(table)
    }
}

/// Golden-table family of a placement label: whole-chip rows join the
/// on-chip subset series.
pub fn family_of(label: &str) -> String {
    let on_chip = label == "a" || (label.starts_with('n') && label[1..].parse::<u64>().is_ok());
    if on_chip {
        "on-chip".into()
    } else {
        label.into()
    }
}

pub fn series_key_parts(r: &SeriesRow) -> (String, String, u64) {
    let stem = r
        .experiment_id
        .rsplit_once('-')
        .map_or(r.experiment_id.as_str(), |(s, _)| s);
    let op = stem
        .split('-')
        .filter(|w| *w != "latency" && *w != "bw")
        .collect::<Vec<_>>()
        .join("-");
    (
        op,
        family_of(&r.experiment_label),
        r.message_bytes.unwrap_or(0),
    )
}

pub fn load_hop_samples(path: &Path) -> Result<Vec<HopSample>> {
    #[derive(Deserialize)]
    struct Raw {
        src_dnc: usize,
        dst_dnc: usize,
        hops: usize,
        latency_ns: f64,
        #[allow(dead_code)]
        provenance: String,
    }
    Ok(read_rows::<Raw>(path, &HOP_HEADER)?
        .into_iter()
        .map(|r| HopSample {
            src_dnc: r.src_dnc,
            dst_dnc: r.dst_dnc,
            hops: r.hops,
            latency_ns: r.latency_ns,
        })
        .collect())
}

//! Golden-table lookup. Each series holds one metric of one operation,
//! placement family and message size, indexed by participant count, and is
//! interpolated linearly in log(participants).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::Topology;
use crate::units::Time;

use super::{classify, CollectiveResult, CollectiveSpec};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SeriesKey {
    pub op: String,
    pub metric: String,
    pub family: String,
    pub message_bytes: u64,
}

impl SeriesKey {
    pub fn new(op: &str, metric: &str, family: &str, message_bytes: u64) -> Self {
        SeriesKey {
            op: op.into(),
            metric: metric.into(),
            family: family.into(),
            message_bytes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lookup {
    pub value: f64,
    pub extrapolated: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalTable {
    series: BTreeMap<SeriesKey, Vec<(u64, f64)>>,
}

impl EmpiricalTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: SeriesKey, participants: u64, value: f64) -> Result<()> {
        if participants == 0 || !value.is_finite() {
            return Err(Error::Golden(format!(
                "{key:?}: knot ({participants}, {value}) needs positive participants and a finite value"
            )));
        }
        let knots = self.series.entry(key.clone()).or_default();
        match knots.binary_search_by_key(&participants, |k| k.0) {
            Ok(i) if knots[i].1 != value => Err(Error::Golden(format!(
                "{key:?}: conflicting values at {participants} participants"
            ))),
            Ok(_) => Ok(()),
            Err(i) => {
                knots.insert(i, (participants, value));
                Ok(())
            }
        }
    }

    pub fn series(&self, key: &SeriesKey) -> Option<&[(u64, f64)]> {
        self.series.get(key).map(Vec::as_slice)
    }

    pub fn keys(&self) -> impl Iterator<Item = &SeriesKey> {
        self.series.keys()
    }

    pub fn lookup(&self, key: &SeriesKey, participants: u64) -> Result<Lookup> {
        let knots = self
            .series
            .get(key)
            .ok_or_else(|| Error::Golden(format!("no golden series for {key:?}")))?;
        Ok(interpolate(knots, participants))
    }

    /// Empirical counterpart of the analytic predictor.
    pub fn predict(&self, spec: &CollectiveSpec, topology: &Topology) -> Result<CollectiveResult> {
        let family = classify(topology, spec.root, &spec.participants)
            .family()
            .ok_or_else(|| Error::Golden("placement matches no golden family".into()))?;
        let n = spec.participants.len() as u64;
        let k = |m: &str| SeriesKey::new(spec.op.slug(), m, &family, spec.message_bytes);
        let get = |m: &str| self.series.get(&k(m)).map(|s| interpolate(s, n));
        let count = spec.transfer_count();
        let volume = (count as u64 * spec.message_bytes) as f64;
        let (lat, agg) = (get("latency_ns"), get("aggregate_bw"));
        let (latency_ns, aggregate, extrapolated) = match (lat, agg) {
            (Some(l), Some(a)) => (l.value, a.value, l.extrapolated || a.extrapolated),
            (Some(l), None) => (l.value, volume / (l.value * 1e-9), l.extrapolated),
            (None, Some(a)) => (volume / a.value * 1e9, a.value, a.extrapolated),
            (None, None) => {
                return Err(Error::Golden(format!(
                    "no golden {} series for family {family} at {} bytes",
                    spec.op, spec.message_bytes
                )))
            }
        };
        let per_transfer = get("per_transfer_bw").map_or(aggregate / count as f64, |p| p.value);
        Ok(CollectiveResult {
            total_latency: Time::from_ns(latency_ns),
            aggregate_bw: aggregate,
            per_transfer_bw: per_transfer,
            transfer_count: count,
            extrapolated,
        })
    }
}

fn interpolate(knots: &[(u64, f64)], n: u64) -> Lookup {
    if let Ok(i) = knots.binary_search_by_key(&n, |k| k.0) {
        return Lookup {
            value: knots[i].1,
            extrapolated: false,
        };
    }
    if knots.len() == 1 {
        return Lookup {
            value: knots[0].1,
            extrapolated: true,
        };
    }
    let first = knots[0].0;
    let last = knots[knots.len() - 1].0;
    let extrapolated = n < first || n > last;
    let i = knots.partition_point(|k| k.0 < n).clamp(1, knots.len() - 1);
    let ((x0, y0), (x1, y1)) = (knots[i - 1], knots[i]);
    let (lx0, lx1, lx) = ((x0 as f64).ln(), (x1 as f64).ln(), (n.max(1) as f64).ln());
    let w = (lx - lx0) / (lx1 - lx0);
    let value = (y0 + w * (y1 - y0)).max(0.0);
    Lookup {
        value,
        extrapolated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> (EmpiricalTable, SeriesKey) {
        let k = SeriesKey::new("gather", "latency_ns", "on-chip", 4);
        let mut t = EmpiricalTable::new();
        for (n, v) in [(2, 94.0), (38, 97.0), (76, 121.0), (1216, 835.0)] {
            t.insert(k.clone(), n, v).unwrap();
        }
        (t, k)
    }

    #[test]
    fn knots_exact() {
        let (t, k) = table();
        let l = t.lookup(&k, 76).unwrap();
        assert_eq!(l.value.to_bits(), 121.0f64.to_bits());
        assert!(!l.extrapolated);
    }

    #[test]
    fn log_midpoint() {
        let (t, k) = table();
        // sqrt(38 * 76) sits halfway in log space
        let mid = ((38.0f64 * 76.0).sqrt()).round() as u64;
        let l = t.lookup(&k, mid).unwrap();
        assert!((l.value - 109.0).abs() < 0.2, "{}", l.value);
        assert!(t.lookup(&k, 4000).unwrap().extrapolated);
        assert!(t.lookup(&k, 1).unwrap().extrapolated);
    }

    #[test]
    fn conflicting_knot() {
        let (mut t, k) = table();
        assert!(t.insert(k.clone(), 76, 121.0).is_ok());
        assert!(t.insert(k, 76, 122.0).is_err());
    }
}

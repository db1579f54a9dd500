use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopFit {
    pub base_ns: f64,
    pub per_hop_ns: f64,
    /// observed minus fitted, in input order
    pub residuals: Vec<f64>,
}

/// Ordinary least squares for `latency = base + per_hop * (hops - 1)`.
pub fn calibrate_hop_line(samples: &[(usize, f64)]) -> Result<HopFit> {
    let first = samples
        .first()
        .ok_or_else(|| Error::DegenerateFit("no samples".into()))?
        .0;
    if samples.iter().all(|s| s.0 == first) {
        return Err(Error::DegenerateFit(format!(
            "all {} samples at {first} hops",
            samples.len()
        )));
    }
    if samples.iter().any(|s| s.0 == 0) {
        return Err(Error::DegenerateFit(
            "zero-hop sample has no link latency".into(),
        ));
    }
    let n = samples.len() as f64;
    let x = |h: usize| h as f64 - 1.0;
    let mx = samples.iter().map(|s| x(s.0)).sum::<f64>() / n;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let sxx: f64 = samples.iter().map(|s| (x(s.0) - mx).powi(2)).sum();
    let sxy: f64 = samples.iter().map(|s| (x(s.0) - mx) * (s.1 - my)).sum();
    let per_hop_ns = sxy / sxx;
    let base_ns = my - per_hop_ns * mx;
    let residuals = samples
        .iter()
        .map(|s| s.1 - (base_ns + per_hop_ns * x(s.0)))
        .collect();
    Ok(HopFit {
        base_ns,
        per_hop_ns,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let s: Vec<_> = (1..=8)
            .map(|h| (h, 500.0 + 160.0 * (h - 1) as f64))
            .collect();
        let f = calibrate_hop_line(&s).unwrap();
        assert!((f.per_hop_ns - 160.0).abs() < 1e-9);
        assert!(f.residuals.iter().all(|r| r.abs() < 1e-9));
    }

    #[test]
    fn two_points() {
        let f = calibrate_hop_line(&[(1, 524.0), (2, 684.0)]).unwrap();
        assert!((f.base_ns - 524.0).abs() < 1e-9);
        assert!((f.per_hop_ns - 160.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate() {
        assert!(calibrate_hop_line(&[(2, 1.0), (2, 3.0)]).is_err());
        assert!(calibrate_hop_line(&[]).is_err());
    }
}

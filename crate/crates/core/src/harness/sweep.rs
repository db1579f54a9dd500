//! One-parameter sweeps around a named experiment.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::bsp_engine::{run_superstep, Superstep};
use crate::collectives::{CollectiveOp, CollectiveSpec};
use crate::error::{Error, Result};

use super::experiments::{
    collective_spec, p2p_messages, run_experiment, Experiment, HostDest, MessageSize, P2pPattern,
    ReduceTiles, RunContext, Scenario, ON_CHIP_SUBSETS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    MessageSize,
    Scale,
    Threads,
    Width,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::MessageSize => "message_size",
            Axis::Scale => "scale",
            Axis::Threads => "threads",
            Axis::Width => "width",
        })
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "message_size" | "message-size" | "size" => Ok(Axis::MessageSize),
            "scale" => Ok(Axis::Scale),
            "threads" => Ok(Axis::Threads),
            "width" => Ok(Axis::Width),
            _ => Err(Error::InvalidArgument(format!(
                "axis must be message_size, scale, threads or width, got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub experiment_id: String,
    pub axis: Axis,
    pub x_label: String,
    pub metric: String,
    pub points: Vec<(f64, f64)>,
    /// Whether the metric never decreases along the axis.
    pub monotone: bool,
    pub log_x: bool,
}

impl Curve {
    fn new(
        exp: &Experiment,
        axis: Axis,
        x_label: &str,
        metric: &str,
        points: Vec<(f64, f64)>,
        log_x: bool,
    ) -> Self {
        let monotone = points.windows(2).all(|w| w[1].1 >= w[0].1);
        Curve {
            experiment_id: exp.id.clone(),
            axis,
            x_label: x_label.into(),
            metric: metric.into(),
            points,
            monotone,
            log_x,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{},{}\n", self.x_label, self.metric);
        for (x, y) in &self.points {
            s.push_str(&format!("{x},{y}\n"));
        }
        s
    }

    pub fn to_svg(&self) -> String {
        super::svg::line_chart(
            &format!("{} vs {}", self.experiment_id, self.axis),
            &self.x_label,
            &self.metric,
            &self.points,
            self.log_x,
        )
    }
}

fn powers(from: u64, to: u64) -> Vec<u64> {
    std::iter::successors(Some(from), |&x| Some(x * 2))
        .take_while(|&x| x <= to)
        .collect()
}

fn headline(exp: &Experiment) -> &'static str {
    match exp.scenario {
        Scenario::MemoryRead { .. } => "bandwidth",
        Scenario::MemoryLatency => "latency_cycles",
        _ if exp.id.contains("-bw-") => "aggregate_bw",
        _ => "latency_ns",
    }
}

fn vary(
    exp: &Experiment,
    ctx: &RunContext<'_>,
    metric: &str,
    scenarios: Vec<(f64, Scenario)>,
) -> Result<Vec<(f64, f64)>> {
    scenarios
        .into_iter()
        .map(|(x, scenario)| {
            let e = Experiment {
                scenario,
                ..exp.clone()
            };
            let m = run_experiment(&e, ctx)?;
            m.get(metric)
                .map(|&y| (x, y))
                .ok_or_else(|| Error::InvalidArgument(format!("{} produces no {metric}", exp.id)))
        })
        .collect()
}

/// Sweeps one parameter of `exp`, keeping the rest of its scenario.
pub fn sweep(exp: &Experiment, axis: Axis, ctx: &RunContext<'_>) -> Result<Curve> {
    let inapplicable = || Error::InapplicableAxis {
        axis: axis.to_string(),
        id: exp.id.clone(),
    };
    let topo = ctx.topology;
    let params = ctx.params;
    let metric = headline(exp);
    let curve =
        |x_label: &str, points, log_x| Ok(Curve::new(exp, axis, x_label, metric, points, log_x));
    match (&exp.scenario, axis) {
        (Scenario::MemoryRead { width_bits }, _) => {
            let width = width_bits.unwrap_or(128);
            let threads = params.costs.memory.threads_max;
            let bw = |w, block, t| {
                params
                    .memory_read_bandwidth(topo, w, block, t)
                    .map(|b| b.chip)
            };
            let (label, pts, log): (&str, Result<Vec<_>>, bool) = match axis {
                Axis::MessageSize => (
                    "block_bytes",
                    powers(16, 1 << 16)
                        .into_iter()
                        .map(|b| Ok((b as f64, bw(width, Some(b), threads)?)))
                        .collect(),
                    true,
                ),
                Axis::Threads => (
                    "threads",
                    (1..=threads)
                        .map(|t| Ok((t as f64, bw(width, None, t)?)))
                        .collect(),
                    false,
                ),
                Axis::Width => (
                    "width_bits",
                    [32u32, 64, 128]
                        .into_iter()
                        .map(|w| Ok((w as f64, bw(w, None, threads)?)))
                        .collect(),
                    false,
                ),
                Axis::Scale => return Err(inapplicable()),
            };
            curve(label, pts?, log)
        }
        (Scenario::MemoryLatency, Axis::MessageSize) => {
            // load-to-use latency does not depend on the access footprint
            let cycles = params.memory_latency(topo).cycles as f64;
            curve(
                "footprint_bytes",
                powers(4, 1 << 18)
                    .into_iter()
                    .map(|b| (b as f64, cycles))
                    .collect(),
                true,
            )
        }
        (Scenario::P2p(pattern), Axis::MessageSize) => {
            let base = p2p_messages(topo, pattern, ctx.seed)?;
            let mut pts = Vec::new();
            for b in powers(4, 1 << 16) {
                let msgs: Vec<_> = base
                    .iter()
                    .map(|m| crate::bsp_engine::Message { bytes: b, ..*m })
                    .collect();
                let trace = run_superstep(topo, params, &Superstep::exchange(msgs))?;
                let y = if metric == "latency_ns" {
                    trace.exchange_span().as_ns()
                } else {
                    trace.bytes_sent() as f64 / trace.exchange_span().as_secs()
                };
                pts.push((b as f64, y));
            }
            curve("message_bytes", pts, true)
        }
        (Scenario::P2p(P2pPattern::OnChip(_)), Axis::Scale) => {
            let s = ON_CHIP_SUBSETS
                .iter()
                .chain(&[1216])
                .map(|&n| (n as f64, Scenario::P2p(P2pPattern::OnChip(n))))
                .collect();
            curve("transfers", vary(exp, ctx, metric, s)?, true)
        }
        (Scenario::P2p(P2pPattern::Random(_)), Axis::Scale) => {
            let s = ['e', 'h', 'i', 'j']
                .into_iter()
                .filter(|&c| {
                    super::processors_of(c).is_some_and(|p| p.len() <= topo.processor_count())
                })
                .map(|c| {
                    (
                        super::processors_of(c).unwrap().len() as f64,
                        Scenario::P2p(P2pPattern::Random(c)),
                    )
                })
                .collect();
            curve("processors", vary(exp, ctx, metric, s)?, true)
        }
        (Scenario::Collective { op, label, size }, Axis::MessageSize) => {
            let base = collective_spec(topo, params, *op, label, MessageSize::Minimum)?;
            let max = base.max_message_size(topo, &params.costs.collectives)?;
            let metric = if *size == MessageSize::Maximum {
                "aggregate_bw"
            } else {
                "latency_ns"
            };
            let mut pts = Vec::new();
            for b in powers(4, max) {
                let spec = CollectiveSpec {
                    message_bytes: b,
                    ..base.clone()
                };
                let r = crate::collectives::predict(&spec, topo, params)?;
                let y = if metric == "aggregate_bw" {
                    r.aggregate_bw
                } else {
                    r.total_latency.as_ns()
                };
                pts.push((b as f64, y));
            }
            Ok(Curve::new(exp, axis, "message_bytes", metric, pts, true))
        }
        (Scenario::Collective { op, label, size }, Axis::Scale) => {
            let on_chip = label == "self" || label == "a" || label.starts_with('n');
            let first = usize::from(*op != CollectiveOp::Broadcast);
            let labels: Vec<(f64, String)> = if on_chip {
                ON_CHIP_SUBSETS[first..]
                    .iter()
                    .map(|n| (*n as f64, format!("n{n}")))
                    .chain([(1216.0, "a".to_string())])
                    .collect()
            } else {
                ['e', 'h', 'i', 'j']
                    .into_iter()
                    .filter(|&c| {
                        super::processors_of(c).is_some_and(|p| p.len() <= topo.processor_count())
                    })
                    .map(|c| (super::processors_of(c).unwrap().len() as f64, c.to_string()))
                    .collect()
            };
            let s = labels
                .into_iter()
                .map(|(x, l)| {
                    (
                        x,
                        Scenario::Collective {
                            op: *op,
                            label: l,
                            size: *size,
                        },
                    )
                })
                .collect();
            curve(
                if on_chip {
                    "participants"
                } else {
                    "processors"
                },
                vary(exp, ctx, metric, s)?,
                true,
            )
        }
        (Scenario::Reduce { tiles, scaling, .. }, Axis::MessageSize) => {
            let s = powers(1, 1 << 14)
                .into_iter()
                .map(|k| {
                    (
                        (k * crate::collectives::OPERAND_BYTES) as f64,
                        Scenario::Reduce {
                            tiles: tiles.clone(),
                            operands: k,
                            scaling: *scaling,
                        },
                    )
                })
                .collect();
            curve("operand_bytes", vary(exp, ctx, metric, s)?, true)
        }
        (
            Scenario::Reduce {
                tiles: ReduceTiles::Label(_),
                operands,
                scaling,
            },
            Axis::Scale,
        ) => {
            let s = ['a', 'e', 'h', 'i', 'j']
                .into_iter()
                .filter(|&c| {
                    super::processors_of(c).is_some_and(|p| p.len() <= topo.processor_count())
                })
                .map(|c| {
                    (
                        super::processors_of(c).unwrap().len() as f64,
                        Scenario::Reduce {
                            tiles: ReduceTiles::Label(c),
                            operands: *operands,
                            scaling: *scaling,
                        },
                    )
                })
                .collect();
            curve("processors", vary(exp, ctx, metric, s)?, true)
        }
        (
            Scenario::Host {
                dest,
                bytes_per_tile: _,
            },
            Axis::MessageSize,
        ) => {
            let s = powers(4, 1 << 20)
                .into_iter()
                .map(|b| {
                    (
                        b as f64,
                        Scenario::Host {
                            dest: dest.clone(),
                            bytes_per_tile: b,
                        },
                    )
                })
                .collect();
            curve("bytes_per_tile", vary(exp, ctx, metric, s)?, true)
        }
        (
            Scenario::Host {
                dest: HostDest::Tiles(_),
                bytes_per_tile,
            },
            Axis::Scale,
        ) => {
            let s = ON_CHIP_SUBSETS
                .iter()
                .chain(&[1216])
                .map(|&n| {
                    (
                        n as f64,
                        Scenario::Host {
                            dest: HostDest::Tiles(n),
                            bytes_per_tile: *bytes_per_tile,
                        },
                    )
                })
                .collect();
            curve("tiles", vary(exp, ctx, metric, s)?, true)
        }
        _ => Err(inapplicable()),
    }
}

//! Sum-reduction to a root tile, staged through the machine hierarchy:
//! tiles to their column leader, column leaders to the processor leader,
//! across the board rung, then along the rails toward the root board.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::bsp_engine::{Message, Superstep};
use crate::cost_model::CostParams;
use crate::error::{Error, Result};
use crate::topology::{TileId, Topology};
use crate::units::Time;

use super::program_time;

/// Single-precision operands.
pub const OPERAND_BYTES: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    /// `operands` per tile.
    Weak,
    /// `operands` in total, split evenly with the remainder going to the
    /// lowest tiles.
    Strong,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducePlan {
    pub root: TileId,
    pub operands: BTreeMap<TileId, u64>,
    /// Each stage's (sender, receiver) pairs; stages run one after another.
    pub stages: Vec<Vec<(TileId, TileId)>>,
    pub steps: Vec<Superstep>,
}

/// Time to add `k` values already resident on one tile. A single value
/// needs no work.
pub fn reduce_compute_time(params: &CostParams, k: u64) -> Time {
    let c = &params.costs.collectives;
    if k > 1 {
        Time::from_ns(c.reduce_fixed_ns + c.reduce_per_operand_ns * k as f64)
    } else {
        Time::ZERO
    }
}

pub fn reduce_plan(
    topology: &Topology,
    params: &CostParams,
    participants: &[TileId],
    operands: u64,
    scaling: Scaling,
) -> Result<ReducePlan> {
    if operands == 0 {
        return Err(Error::InvalidCollective(
            "reduce needs at least one operand".into(),
        ));
    }
    let tiles: BTreeSet<TileId> = participants.iter().copied().collect();
    for &t in &tiles {
        topology.check_tile(t)?;
    }
    let n = tiles.len() as u64;
    let counts: BTreeMap<TileId, u64> = match scaling {
        Scaling::Weak => tiles.iter().map(|&t| (t, operands)).collect(),
        Scaling::Strong => tiles
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                (
                    t,
                    operands / n.max(1) + u64::from((i as u64) < operands % n.max(1)),
                )
            })
            .filter(|&(_, k)| k > 0)
            .collect(),
    };
    let root = *counts.keys().next().ok_or(Error::NoParticipants)?;

    let stages = hierarchy_stages(topology, root, counts.keys().copied());

    let mut steps = Vec::with_capacity(stages.len() + 1);
    let mut first = Superstep::default();
    for (&t, &k) in &counts {
        let c = reduce_compute_time(params, k);
        if c > Time::ZERO {
            first.add_compute(t, c);
        }
    }
    let mut current = first;
    for stage in &stages {
        current.messages = stage
            .iter()
            .map(|&(s, d)| Message::new(s, d, OPERAND_BYTES))
            .collect();
        steps.push(std::mem::take(&mut current));
        let mut received: BTreeMap<TileId, u64> = BTreeMap::new();
        for &(_, d) in stage {
            *received.entry(d).or_default() += 1;
        }
        for (d, k) in received {
            current.add_compute(d, reduce_compute_time(params, k + 1));
        }
    }
    if !current.compute_ns_per_tile.is_empty() {
        steps.push(current);
    }
    Ok(ReducePlan {
        root,
        operands: counts,
        stages,
        steps,
    })
}

fn hierarchy_stages(
    topology: &Topology,
    root: TileId,
    tiles: impl Iterator<Item = TileId>,
) -> Vec<Vec<(TileId, TileId)>> {
    let column = |t: TileId| crate::topology::tile_locus(t.local_tile).column;
    let mut by_column: BTreeMap<(usize, usize), Vec<TileId>> = BTreeMap::new();
    for t in tiles {
        by_column
            .entry((t.processor_dnc, column(t)))
            .or_default()
            .push(t);
    }
    let mut stages = Vec::new();

    stages.push(
        by_column
            .values()
            .flat_map(|ts| ts[1..].iter().map(|&t| (t, ts[0])))
            .collect::<Vec<_>>(),
    );

    let mut proc_leader: BTreeMap<usize, TileId> = BTreeMap::new();
    let mut to_leader = Vec::new();
    for (&(p, _), ts) in &by_column {
        match proc_leader.get(&p) {
            None => {
                proc_leader.insert(p, ts[0]);
            }
            Some(&l) => to_leader.push((ts[0], l)),
        }
    }
    // the root is the lowest tile, so it leads its column and processor
    debug_assert_eq!(proc_leader.get(&root.processor_dnc), Some(&root));
    stages.push(to_leader);

    let mut board_rep: BTreeMap<usize, TileId> = BTreeMap::new();
    let mut rung = Vec::new();
    let same_parity = |p: usize| p % 2 == root.processor_dnc % 2;
    for (&p, &l) in &proc_leader {
        let b = topology.board_of(p);
        let partner = proc_leader.get(&(p ^ 1));
        match partner {
            Some(&pl) if !same_parity(p) => rung.push((l, pl)),
            _ => {
                board_rep.insert(b, l);
            }
        }
    }
    stages.push(rung);

    let rb = topology.board_of(root.processor_dnc);
    let above: Vec<TileId> = board_rep.range(rb..).map(|(_, &t)| t).collect();
    let below: Vec<TileId> = board_rep.range(..=rb).rev().map(|(_, &t)| t).collect();
    let depth = above.len().max(below.len()).saturating_sub(1);
    for s in 0..depth {
        let mut stage = Vec::new();
        for chain in [&above, &below] {
            // farthest boards hand over first
            let m = chain.len();
            if m > s + 1 {
                stage.push((chain[m - 1 - s], chain[m - 2 - s]));
            }
        }
        stages.push(stage);
    }

    stages.retain(|s| !s.is_empty());
    stages
}

impl ReducePlan {
    pub fn time(&self, topology: &Topology, params: &CostParams) -> Result<Time> {
        program_time(topology, params, &self.steps)
    }

    pub fn total_operands(&self) -> u64 {
        self.operands.values().sum()
    }

    /// Carries out the plan on concrete values in its fixed order: each tile
    /// folds its own operands left to right, then every stage adds senders'
    /// partials into receivers in sender order.
    pub fn evaluate<T: Copy + Add<Output = T>>(
        &self,
        values: &BTreeMap<TileId, Vec<T>>,
    ) -> Result<T> {
        let mut partial: BTreeMap<TileId, T> = BTreeMap::new();
        for (&t, &k) in &self.operands {
            let v = values
                .get(&t)
                .filter(|v| v.len() as u64 == k)
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("tile {t} needs exactly {k} operands"))
                })?;
            let sum = v[1..].iter().fold(v[0], |a, &b| a + b);
            partial.insert(t, sum);
        }
        for stage in &self.stages {
            let mut sorted = stage.clone();
            sorted.sort();
            for (s, d) in sorted {
                let v = partial.remove(&s).expect("sender holds a partial");
                let acc = partial.get_mut(&d).expect("receiver holds a partial");
                *acc = *acc + v;
            }
        }
        Ok(partial[&self.root])
    }
}

//! Worst-case and random repair schedules, and the cut-type minimum.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::{build_graph, max_flow, DataCollector, StageRepair};
use crate::cutbound::{cut_capacity, enumerate_cut_types, CutType};
use crate::error::Result;
use crate::params::{RepairBudget, SystemParams};

/// `min` over all cut types of the cut-type capacity.
pub fn min_cut_over_types(p: &SystemParams, b: &RepairBudget) -> u64 {
    enumerate_cut_types(p)
        .iter()
        .map(|t| cut_capacity(t, b, p).expect("enumerated types are valid"))
        .min()
        .expect("at least the all-unrepaired type exists")
}

/// A schedule and collector in which the cut of type `t` exists with exactly
/// the capacity given by [`cut_capacity`].
///
/// The collector reads nodes `0..k`. At stage `j` the next `ℓⱼ` of them are
/// repaired together with `r − ℓⱼ` nodes outside the collector; each
/// collector newcomer takes every previously placed collector node as a
/// helper, and fills the rest of its `d` helpers from outside that set.
pub fn adversarial_schedule(p: &SystemParams, t: &CutType) -> (Vec<StageRepair>, DataCollector) {
    let ells = t.ells();
    let outside: Vec<usize> = (p.k..p.n).collect();
    let mut placed = ells[0];
    let mut schedule = Vec::with_capacity(ells.len() - 1);
    for &l in &ells[1..] {
        let mut failed: Vec<usize> = (placed..placed + l).collect();
        failed.extend(outside.iter().take(p.r - l));
        let survivors: Vec<usize> = (0..p.n).filter(|x| !failed.contains(x)).collect();
        // Collector newcomers see every placed collector node and nothing
        // else inside the collector's eventual cut side.
        let helpers_for = |inside: bool| -> Vec<usize> {
            let h: Vec<usize> = if inside {
                (0..placed).chain(survivors.iter().copied().filter(|&x| x >= placed).take(p.d - placed)).collect()
            } else {
                survivors.iter().copied().take(p.d).collect()
            };
            debug_assert_eq!(h.len(), p.d);
            h
        };
        let helpers = failed.iter().map(|&f| helpers_for(f < p.k)).collect();
        schedule.push(StageRepair { failed, helpers });
        placed += l;
    }
    let dc = DataCollector { stage: schedule.len(), nodes: (0..p.k).collect() };
    (schedule, dc)
}

/// One stage with a uniformly random `r`-subset of failures and independent
/// uniformly random `d`-subsets of survivors as helpers.
pub fn random_stage<R: Rng + ?Sized>(p: &SystemParams, rng: &mut R) -> StageRepair {
    let mut failed = sample(rng, p.n, p.r).into_vec();
    failed.sort_unstable();
    let survivors: Vec<usize> = (0..p.n).filter(|x| !failed.contains(x)).collect();
    let helpers = failed
        .iter()
        .map(|_| {
            let mut h: Vec<usize> =
                sample(rng, survivors.len(), p.d).into_iter().map(|i| survivors[i]).collect();
            h.sort_unstable();
            h
        })
        .collect();
    StageRepair { failed, helpers }
}

pub fn random_collector<R: Rng + ?Sized>(p: &SystemParams, stage: usize, rng: &mut R) -> DataCollector {
    let mut nodes = sample(rng, p.n, p.k).into_vec();
    nodes.sort_unstable();
    DataCollector { stage, nodes }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    /// Minimum cut-type capacity.
    pub formula: u64,
    /// Minimum max-flow over the worst-case graph of each cut type.
    pub adversarial: u64,
    /// Minimum max-flow over random schedules and collectors.
    pub random_min: Option<u64>,
    pub random_graphs: usize,
    /// Random graphs whose flow fell below the formula (must be empty).
    pub violations: usize,
}

impl BoundReport {
    pub fn consistent(&self) -> bool {
        self.formula == self.adversarial
            && self.violations == 0
            && self.random_min.is_none_or(|m| m >= self.formula)
    }
}

/// Compares the cut-type formula with max-flow on worst-case graphs and on
/// `trials` random schedules of up to `max_stages` stages, reading every
/// `k`-subset at the final stage.
pub fn verify_bound<R: Rng + ?Sized>(
    p: &SystemParams,
    b: &RepairBudget,
    trials: usize,
    max_stages: usize,
    rng: &mut R,
) -> Result<BoundReport> {
    let formula = min_cut_over_types(p, b);
    let mut adversarial = u64::MAX;
    for t in enumerate_cut_types(p) {
        let (sched, dc) = adversarial_schedule(p, &t);
        adversarial = adversarial.min(max_flow(&build_graph(p, b, &sched, &dc)?));
    }
    let mut random_min: Option<u64> = None;
    let mut random_graphs = 0;
    let mut violations = 0;
    let subsets = k_subsets(p.n, p.k);
    for _ in 0..trials {
        let stages = rng.gen_range(1..=max_stages.max(1));
        let sched: Vec<StageRepair> = (0..stages).map(|_| random_stage(p, rng)).collect();
        for nodes in &subsets {
            let dc = DataCollector { stage: stages, nodes: nodes.clone() };
            let f = max_flow(&build_graph(p, b, &sched, &dc)?);
            random_graphs += 1;
            if f < formula {
                violations += 1;
            }
            random_min = Some(random_min.map_or(f, |m| m.min(f)));
        }
    }
    Ok(BoundReport { formula, adversarial, random_min, random_graphs, violations })
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for x in start..=n - (k - cur.len()) {
            cur.push(x);
            go(x + 1, n, k, cur, out);
            cur.pop();
        }
    }
    if k <= n {
        go(0, n, k, &mut cur, &mut out);
    }
    out
}

//! Randomized check that a rank profile is transmissive: after any repair
//! schedule, every demand majorized by the profile can be met in full.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adversary::random_stage;
use super::graph::{build_demand_graph, max_flow, StageRepair};
use super::profile::RankProfile;
use crate::error::{Error, Result};
use crate::params::{RepairBudget, SystemParams};

/// A uniformly permuted copy of `u` pushed toward uniform by `moves` random
/// unit transfers from a larger entry to a smaller one. Every such transfer
/// keeps the result majorized by `u`.
pub fn random_majorized<R: Rng + ?Sized>(u: &[u64], moves: usize, rng: &mut R) -> Vec<u64> {
    let mut h = u.to_vec();
    h.shuffle(rng);
    if h.len() < 2 {
        return h;
    }
    for _ in 0..moves {
        let a = rng.gen_range(0..h.len());
        let b = rng.gen_range(0..h.len());
        if h[a] >= h[b] + 2 {
            h[a] -= 1;
            h[b] += 1;
        }
    }
    h
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub schedule: Vec<StageRepair>,
    pub stage: usize,
    pub demand: Vec<u64>,
    pub flow: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransmissiveReport {
    pub trials: usize,
    /// Demand vectors checked (one per trial and stage).
    pub checks: usize,
    pub failures: usize,
    pub first_failure: Option<Counterexample>,
}

impl TransmissiveReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Runs `trials` random schedules of `stages` stages under `budget` (normally
/// `prof.budget`). At every stage, including before any repair, one random
/// demand majorized by the profile is routed to the sink.
pub fn verify_transmissive(
    prof: &RankProfile,
    p: &SystemParams,
    budget: &RepairBudget,
    stages: usize,
    trials: usize,
    seed: u64,
) -> Result<TransmissiveReport> {
    if prof.entries.len() != p.n {
        return Err(Error::Dimension(format!("profile length {} but n = {}", prof.entries.len(), p.n)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let moves = 4 * p.n;
    let mut report = TransmissiveReport { trials, checks: 0, failures: 0, first_failure: None };
    for _ in 0..trials {
        let schedule: Vec<StageRepair> = (0..stages).map(|_| random_stage(p, &mut rng)).collect();
        for stage in 0..=stages {
            let demand = random_majorized(&prof.entries, moves, &mut rng);
            let want: u64 = demand.iter().sum();
            let flow = max_flow(&build_demand_graph(p, budget, &schedule, stage, &demand)?);
            report.checks += 1;
            if flow != want {
                report.failures += 1;
                report.first_failure.get_or_insert_with(|| Counterexample {
                    schedule: schedule.clone(),
                    stage,
                    demand: demand.clone(),
                    flow,
                });
            }
        }
    }
    Ok(report)
}

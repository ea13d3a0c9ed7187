//! Functional repair by random linear network coding.
//!
//! Every node keeps its `α × B` matrix of global encoding vectors. A repair
//! draws random local encoding vectors for the three phases, which composes
//! to one transfer block per newcomer, and is resampled until the regularity
//! property (every `h` majorized by the profile picks a nonsingular `B × B`
//! stack) holds again.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_decode_input, check_repair_input, BandwidthLog};
use crate::error::{Error, Result};
use crate::flowgraph::profile::{majorized_vectors, RankProfile};
use crate::gf::{Elem, Field, Matrix};
use crate::params::{RepairBudget, SystemParams};

pub const DEFAULT_RETRIES: u32 = 32;

#[derive(Clone, Debug)]
pub struct RlncState {
    pub params: SystemParams,
    pub field: Field,
    pub budget: RepairBudget,
    pub profile: RankProfile,
    /// Global encoding matrices `M₁..M_n`, each `α × B`.
    pub matrices: Vec<Matrix>,
    pub stage: usize,
    pub retries: u32,
    demands: Arc<Vec<Vec<u64>>>,
}

/// How the newcomers' symbols are formed from the previous stage's contents:
/// newcomer `failed[a]` stores `maps[a] · s`, where `s` concatenates all `n`
/// nodes' symbols (`nα` entries).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transfer {
    pub failed: Vec<usize>,
    pub maps: Vec<Matrix>,
    pub alpha: usize,
}

impl Transfer {
    /// New contents of each newcomer. Missing nodes contribute zeros; only
    /// helper columns of the maps are nonzero.
    pub fn apply(&self, contents: &[Option<Vec<Elem>>]) -> Result<Vec<(usize, Vec<Elem>)>> {
        let mut s = Vec::with_capacity(contents.len() * self.alpha);
        for c in contents {
            match c {
                Some(v) if v.len() == self.alpha => s.extend_from_slice(v),
                Some(v) => return Err(Error::Dimension(format!("node holds {} symbols, expected {}", v.len(), self.alpha))),
                None => s.extend(std::iter::repeat_n(0, self.alpha)),
            }
        }
        self.failed.iter().zip(&self.maps).map(|(&id, m)| Ok((id, m.mul_vec(&s)?))).collect()
    }

    /// The full `nα × nα` stage transfer matrix: identity blocks for
    /// survivors, the maps for newcomers.
    pub fn full_matrix(&self, n: usize) -> Matrix {
        let a = self.alpha;
        let field = self.maps.first().map(|m| m.field().clone()).unwrap_or_else(|| Field::binary(1).expect("GF(2)"));
        let mut t = Matrix::zeros(&field, n * a, n * a);
        for i in 0..n {
            match self.failed.iter().position(|&f| f == i) {
                Some(k) => {
                    for row in 0..a {
                        for c in 0..n * a {
                            t.set(i * a + row, c, self.maps[k].get(row, c));
                        }
                    }
                }
                None => {
                    for row in 0..a {
                        t.set(i * a + row, i * a + row, 1);
                    }
                }
            }
        }
        t
    }
}

/// Samples stage-0 matrices until the regularity property holds.
pub fn rlnc_init(
    params: SystemParams,
    budget: RepairBudget,
    profile: RankProfile,
    field: Field,
    seed: u64,
) -> Result<RlncState> {
    rlnc_init_with_retries(params, budget, profile, field, seed, DEFAULT_RETRIES)
}

pub fn rlnc_init_with_retries(
    params: SystemParams,
    budget: RepairBudget,
    profile: RankProfile,
    field: Field,
    seed: u64,
    retries: u32,
) -> Result<RlncState> {
    if profile.entries.len() != params.n {
        return Err(Error::Dimension(format!("profile length {} but n = {}", profile.entries.len(), params.n)));
    }
    if profile.budget != budget {
        return Err(Error::Precondition(format!(
            "budget {budget:?} does not match the profile's prescription {:?}",
            profile.budget
        )));
    }
    if profile.total() != budget.b {
        return Err(Error::Precondition("profile must sum to B".into()));
    }
    let demands = Arc::new(majorized_vectors(&profile.entries));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = (budget.alpha as usize, budget.b as usize);
    for _ in 0..retries.max(1) {
        let matrices = (0..params.n).map(|_| random_matrix(&field, a, b, &mut rng)).collect();
        let st = RlncState {
            params,
            field: field.clone(),
            budget,
            profile: profile.clone(),
            matrices,
            stage: 0,
            retries,
            demands: demands.clone(),
        };
        if st.regularity_check() {
            return Ok(st);
        }
    }
    Err(Error::FieldTooSmall { retries })
}

fn random_matrix<R: Rng + ?Sized>(f: &Field, rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let data: Vec<Vec<Elem>> = (0..rows).map(|_| (0..cols).map(|_| f.random(rng)).collect()).collect();
    Matrix::from_rows(f, &data).expect("consistent shape")
}

impl RlncState {
    /// Rebuilds a state from stored matrices (e.g. read back from disk).
    pub fn from_matrices(
        params: SystemParams,
        field: Field,
        profile: RankProfile,
        matrices: Vec<Matrix>,
        stage: usize,
    ) -> Result<Self> {
        let budget = profile.budget;
        let (a, b) = (budget.alpha as usize, budget.b as usize);
        if matrices.len() != params.n || matrices.iter().any(|m| m.rows() != a || m.cols() != b || m.field() != &field) {
            return Err(Error::Dimension(format!("need n = {} matrices of shape {a}x{b} over {field}", params.n)));
        }
        let demands = Arc::new(majorized_vectors(&profile.entries));
        Ok(RlncState { params, field, budget, profile, matrices, stage, retries: DEFAULT_RETRIES, demands })
    }

    pub fn alpha(&self) -> usize {
        self.budget.alpha as usize
    }

    pub fn file_size(&self) -> usize {
        self.budget.b as usize
    }

    pub fn gamma(&self) -> usize {
        self.budget.gamma(&self.params) as usize
    }

    /// Number of integer vectors majorized by the profile.
    pub fn demand_count(&self) -> usize {
        self.demands.len()
    }

    /// `D_h ≠ 0` for every integer `h` majorized by the profile.
    pub fn regularity_check(&self) -> bool {
        self.demands.iter().all(|h| {
            let mut stack = Matrix::zeros(&self.field, 0, self.file_size());
            for (i, &hi) in h.iter().enumerate() {
                for row in 0..hi as usize {
                    stack.push_row(self.matrices[i].row(row)).expect("equal widths");
                }
            }
            stack.det().is_ok_and(|d| d != 0)
        })
    }

    pub fn encode(&self, chunk: &[Elem]) -> Result<Vec<Vec<Elem>>> {
        if chunk.len() != self.file_size() {
            return Err(Error::Dimension(format!("chunk of {} symbols, expected {}", chunk.len(), self.file_size())));
        }
        self.matrices.iter().map(|m| m.mul_vec(chunk)).collect()
    }

    /// Solves for the chunk using `B` independent rows among the given nodes.
    pub fn decode(&self, nodes: &[(usize, &[Elem])]) -> Result<Vec<Elem>> {
        check_decode_input(&self.params, self.alpha(), nodes)?;
        let mut stack = Matrix::zeros(&self.field, 0, self.file_size());
        let mut y = Vec::new();
        for (i, c) in nodes {
            for row in 0..self.alpha() {
                stack.push_row(self.matrices[*i].row(row))?;
                y.push(c[row]);
            }
        }
        let basis = stack.independent_rows();
        if basis.len() < self.file_size() {
            return Err(Error::Singular);
        }
        let yb: Vec<Elem> = basis.iter().map(|&i| y[i]).collect();
        stack.select_rows(&basis).solve(&yb)
    }

    /// One repair stage: returns the stage-`t+1` state, the transfer to apply
    /// to stored symbols, and the traffic.
    pub fn repair(&self, failed: &[usize], helpers: &[Vec<usize>], seed: u64) -> Result<(RlncState, Transfer, BandwidthLog)> {
        let p = &self.params;
        let dummy: Vec<Option<Vec<Elem>>> = (0..p.n).map(|i| (!failed.contains(&i)).then(Vec::new)).collect();
        check_repair_input(p, &dummy, failed, helpers)?;
        let (a, b1, b2) = (self.alpha(), self.budget.beta1 as usize, self.budget.beta2 as usize);
        let na = p.n * a;
        let stacked = {
            let refs: Vec<&Matrix> = self.matrices.iter().collect();
            Matrix::vstack(&refs)?
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let log = BandwidthLog {
            phase1_symbols: (p.r * p.d * b1) as u64,
            phase2_symbols: (p.r * (p.r - 1) * b2) as u64,
            newcomers: p.r as u64,
        };
        for _ in 0..self.retries.max(1) {
            // Phase 1: β₁ random combinations from each helper.
            let u: Vec<Matrix> = helpers
                .iter()
                .map(|hs| {
                    let mut m = Matrix::zeros(&self.field, 0, na);
                    for &h in hs {
                        for _ in 0..b1 {
                            let mut row = vec![0; na];
                            for c in 0..a {
                                row[h * a + c] = self.field.random(&mut rng);
                            }
                            m.push_row(&row).expect("width");
                        }
                    }
                    m
                })
                .collect();
            // Phase 2: β₂ random combinations of each partner's phase-1 data.
            let mut received: Vec<Matrix> = u.clone();
            for (x, ux) in u.iter().enumerate() {
                for (y, recv) in received.iter_mut().enumerate() {
                    if x == y {
                        continue;
                    }
                    for _ in 0..b2 {
                        let q: Vec<Elem> = (0..ux.rows()).map(|_| self.field.random(&mut rng)).collect();
                        let row = ux.transpose().mul_vec(&q)?;
                        recv.push_row(&row)?;
                    }
                }
            }
            // Phase 3: α random combinations of everything received.
            let maps: Vec<Matrix> = received
                .iter()
                .map(|recv| random_matrix(&self.field, a, recv.rows(), &mut rng).mul(recv))
                .collect::<Result<_>>()?;
            let mut next = self.clone();
            for (&id, m) in failed.iter().zip(&maps) {
                next.matrices[id] = m.mul(&stacked)?;
            }
            next.stage += 1;
            if next.regularity_check() {
                let t = Transfer { failed: failed.to_vec(), maps, alpha: a };
                return Ok((next, t, log));
            }
        }
        Err(Error::FieldTooSmall { retries: self.retries })
    }
}

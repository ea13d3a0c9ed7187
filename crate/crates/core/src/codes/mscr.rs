//! Exact-repair code at the minimum-storage point for `d = k`.
//!
//! The chunk is split into `r` groups `m₁..m_r` of `k` symbols; node `i`
//! stores `G_j[i]·m_j` for each `j`. Repair: newcomer `j` (in the agreed
//! order) pulls symbol `j` from each of its `d` helpers, decodes `m_j`, and
//! hands `G_j[i]·m_j` to every other newcomer `i`.

use super::{check_decode_input, check_repair_input, helper_content, BandwidthLog, Rebuilt};
use crate::error::{Error, Result};
use crate::gf::{Elem, Field, Matrix};
use crate::params::SystemParams;

#[derive(Clone, Debug)]
pub struct MscrCode {
    pub params: SystemParams,
    pub field: Field,
    /// `r` matrices of shape `n × k`, each MDS.
    pub generators: Vec<Matrix>,
}

impl MscrCode {
    pub fn new(params: SystemParams, field: Field, generators: Vec<Matrix>) -> Result<Self> {
        let (n, k, r) = (params.n, params.k, params.r);
        if params.d != k {
            return Err(Error::InvalidParams(format!("MSCR construction needs d = k, got {params}")));
        }
        if generators.len() != r {
            return Err(Error::InvalidParams(format!("{} generators, expected r = {r}", generators.len())));
        }
        for (j, g) in generators.iter().enumerate() {
            if g.rows() != n || g.cols() != k || g.field() != &field {
                return Err(Error::Dimension(format!("generator {j} must be {n}x{k} over {field}")));
            }
            if !g.is_mds() {
                return Err(Error::InvalidParams(format!("generator {j} is not MDS")));
            }
        }
        Ok(MscrCode { params, field, generators })
    }

    /// The same [`systematic_mds`] generator for every group.
    pub fn systematic(params: SystemParams, field: Field) -> Result<Self> {
        let g = systematic_mds(&field, params.n, params.k)?;
        let gens = vec![g; params.r];
        Self::new(params, field, gens)
    }

    pub fn alpha(&self) -> usize {
        self.params.r
    }

    pub fn file_size(&self) -> usize {
        self.params.k * self.params.r
    }

    pub fn gamma(&self) -> usize {
        self.params.d + self.params.r - 1
    }

    pub fn encode(&self, chunk: &[Elem]) -> Result<Vec<Vec<Elem>>> {
        let (k, n) = (self.params.k, self.params.n);
        if chunk.len() != self.file_size() {
            return Err(Error::Dimension(format!("chunk of {} symbols, expected {}", chunk.len(), self.file_size())));
        }
        Ok((0..n)
            .map(|i| {
                self.generators
                    .iter()
                    .enumerate()
                    .map(|(j, g)| self.field.dot(g.row(i), &chunk[j * k..(j + 1) * k]))
                    .collect()
            })
            .collect())
    }

    pub fn decode(&self, nodes: &[(usize, &[Elem])]) -> Result<Vec<Elem>> {
        check_decode_input(&self.params, self.alpha(), nodes)?;
        let ids: Vec<usize> = nodes.iter().map(|(i, _)| *i).collect();
        let mut chunk = Vec::with_capacity(self.file_size());
        for (j, g) in self.generators.iter().enumerate() {
            let sub = g.select_rows(&ids);
            let y: Vec<Elem> = nodes.iter().map(|(_, c)| c[j]).collect();
            chunk.extend(sub.solve(&y).map_err(|_| Error::Singular)?);
        }
        Ok(chunk)
    }

    /// Rebuilds `failed` (ascending order unless `ordering` permutes it).
    /// `helpers[a]` serves `failed[a]`. Returns `(id, contents)` per newcomer.
    pub fn repair(
        &self,
        contents: &[Option<Vec<Elem>>],
        failed: &[usize],
        helpers: &[Vec<usize>],
        ordering: Option<&[usize]>,
    ) -> Result<(Rebuilt, BandwidthLog)> {
        let p = &self.params;
        check_repair_input(p, contents, failed, helpers)?;
        let order: Vec<usize> = match ordering {
            Some(o) => {
                let mut a = o.to_vec();
                let mut b = failed.to_vec();
                a.sort_unstable();
                b.sort_unstable();
                if a != b {
                    return Err(Error::InvalidSchedule(format!("ordering {o:?} is not a permutation of {failed:?}")));
                }
                o.to_vec()
            }
            None => {
                let mut o = failed.to_vec();
                o.sort_unstable();
                o
            }
        };
        let mut log = BandwidthLog { newcomers: p.r as u64, ..Default::default() };
        let mut new: Vec<Vec<Elem>> = vec![vec![0; p.r]; p.r];
        let slot = |id: usize| order.iter().position(|&x| x == id).expect("ordering covers failed");

        // Phase 1: newcomer order[j] decodes m_j from symbol j of its helpers.
        let mut groups = Vec::with_capacity(p.r);
        for (j, &id) in order.iter().enumerate() {
            let hs = &helpers[failed.iter().position(|&f| f == id).expect("same set")];
            let y: Vec<Elem> = hs.iter().map(|&h| helper_content(contents, h)[j]).collect();
            log.phase1_symbols += hs.len() as u64;
            let g = &self.generators[j];
            groups.push(g.select_rows(hs).solve(&y).map_err(|_| Error::Singular)?);
        }
        // Phase 2: newcomer order[j] ships G_j[i]·m_j to every other newcomer i,
        // and keeps its own.
        for (j, m) in groups.iter().enumerate() {
            for &id in &order {
                new[slot(id)][j] = self.field.dot(self.generators[j].row(id), m);
                if id != order[j] {
                    log.phase2_symbols += 1;
                }
            }
        }
        let out = order.iter().zip(new).map(|(&id, c)| (id, c)).collect();
        Ok((out, log))
    }

    /// `α × B` global encoding vectors of node `i`.
    pub fn node_matrix(&self, i: usize) -> Matrix {
        let (k, r) = (self.params.k, self.params.r);
        let mut m = Matrix::zeros(&self.field, r, k * r);
        for (j, g) in self.generators.iter().enumerate() {
            for c in 0..k {
                m.set(j, j * k + c, g.get(i, c));
            }
        }
        m
    }
}

/// `n × k` MDS matrix whose top `k` rows are the identity: a single all-ones
/// parity row when `n = k + 1` (valid over any field), otherwise derived from
/// a Vandermonde matrix on `0..n`, which needs `q ≥ n`.
pub fn systematic_mds(field: &Field, n: usize, k: usize) -> Result<Matrix> {
    if n == k + 1 {
        let mut m = Matrix::identity(field, k);
        m.push_row(&vec![1; k])?;
        return Ok(m);
    }
    if n as u64 > field.order() {
        return Err(Error::UnsupportedField(format!("need q >= n = {n}, have {field}")));
    }
    let evals: Vec<Elem> = (0..n as Elem).collect();
    let v = Matrix::vandermonde(field, k, &evals)?;
    let top = v.select_rows(&(0..k).collect::<Vec<_>>()).invert()?;
    v.mul(&top)
}

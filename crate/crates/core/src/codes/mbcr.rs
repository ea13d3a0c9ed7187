//! Exact-repair code at the minimum-bandwidth point for `d = k`, `n = d + r`.
//!
//! The chunk is split into `n` groups `x₀..x_{n−1}` of `k` symbols, laid out
//! in an `n × n` array: cell `(i, i)` is `xᵢ` itself and cell `(i, j)` is one
//! coded symbol `H_j[row]·x_j`, where `row` is the position of `i` among the
//! nodes other than `j`. Node `i` stores row `i`; column `j` is computable by
//! node `j` alone.

use super::{check_decode_input, check_repair_input, helper_content, BandwidthLog, Rebuilt};
use crate::error::{Error, Result};
use crate::gf::{Elem, Field, Matrix};
use crate::params::SystemParams;

#[derive(Clone, Debug)]
pub struct MbcrCode {
    pub params: SystemParams,
    pub field: Field,
    /// `n` matrices of shape `(n−1) × k`, every `k` rows independent.
    pub h: Vec<Matrix>,
}

/// Row of `H_j` used for cell `(i, j)`, `i ≠ j`.
fn h_row(i: usize, j: usize) -> usize {
    if i < j {
        i
    } else {
        i - 1
    }
}

impl MbcrCode {
    pub fn new(params: SystemParams, field: Field, h: Vec<Matrix>) -> Result<Self> {
        let (n, d, k, r) = (params.n, params.d, params.k, params.r);
        if d != k || n != d + r {
            return Err(Error::InvalidParams(format!("MBCR construction needs d = k and n = d + r, got {params}")));
        }
        if h.len() != n {
            return Err(Error::InvalidParams(format!("{} H matrices, expected n = {n}", h.len())));
        }
        for (j, m) in h.iter().enumerate() {
            if m.rows() != n - 1 || m.cols() != k || m.field() != &field {
                return Err(Error::Dimension(format!("H_{j} must be {}x{k} over {field}", n - 1)));
            }
            if !m.is_mds() {
                return Err(Error::InvalidParams(format!("H_{j} has a singular {k}x{k} submatrix")));
            }
        }
        Ok(MbcrCode { params, field, h })
    }

    /// The same systematic `H` for every group (see [`systematic_mds`]).
    ///
    /// [`systematic_mds`]: super::mscr::systematic_mds
    pub fn systematic(params: SystemParams, field: Field) -> Result<Self> {
        let m = super::mscr::systematic_mds(&field, params.n - 1, params.k)?;
        let h = vec![m; params.n];
        Self::new(params, field, h)
    }

    pub fn alpha(&self) -> usize {
        2 * self.params.d + self.params.r - 1
    }

    pub fn file_size(&self) -> usize {
        self.params.k * self.params.n
    }

    pub fn gamma(&self) -> usize {
        self.alpha()
    }

    fn group<'a>(&self, chunk: &'a [Elem], j: usize) -> &'a [Elem] {
        let k = self.params.k;
        &chunk[j * k..(j + 1) * k]
    }

    /// Symbol in cell `(i, j)`, `i ≠ j`, from group `x_j`.
    fn cell(&self, i: usize, j: usize, xj: &[Elem]) -> Elem {
        self.field.dot(self.h[j].row(h_row(i, j)), xj)
    }

    /// Offset of cell `(i, j)` within node `i`'s contents.
    fn offset(&self, i: usize, j: usize) -> usize {
        let k = self.params.k;
        if j < i {
            j
        } else if j == i {
            i
        } else {
            j + k - 1
        }
    }

    pub fn encode(&self, chunk: &[Elem]) -> Result<Vec<Vec<Elem>>> {
        if chunk.len() != self.file_size() {
            return Err(Error::Dimension(format!("chunk of {} symbols, expected {}", chunk.len(), self.file_size())));
        }
        let n = self.params.n;
        Ok((0..n)
            .map(|i| {
                let mut row = Vec::with_capacity(self.alpha());
                for j in 0..n {
                    if j == i {
                        row.extend_from_slice(self.group(chunk, i));
                    } else {
                        row.push(self.cell(i, j, self.group(chunk, j)));
                    }
                }
                row
            })
            .collect())
    }

    pub fn decode(&self, nodes: &[(usize, &[Elem])]) -> Result<Vec<Elem>> {
        check_decode_input(&self.params, self.alpha(), nodes)?;
        let (n, k) = (self.params.n, self.params.k);
        let mut chunk = Vec::with_capacity(self.file_size());
        for j in 0..n {
            if let Some((_, c)) = nodes.iter().find(|(i, _)| *i == j) {
                chunk.extend_from_slice(&c[j..j + k]);
                continue;
            }
            let rows: Vec<usize> = nodes.iter().map(|(i, _)| h_row(*i, j)).collect();
            let y: Vec<Elem> = nodes.iter().map(|(i, c)| c[self.offset(*i, j)]).collect();
            chunk.extend(self.h[j].select_rows(&rows).solve(&y).map_err(|_| Error::Singular)?);
        }
        Ok(chunk)
    }

    /// Rebuilds the `r` failed nodes from all `d` survivors.
    pub fn repair(&self, contents: &[Option<Vec<Elem>>], failed: &[usize]) -> Result<(Rebuilt, BandwidthLog)> {
        let (n, k, r) = (self.params.n, self.params.k, self.params.r);
        let survivors: Vec<usize> = (0..n).filter(|x| !failed.contains(x)).collect();
        let helpers = vec![survivors.clone(); failed.len()];
        check_repair_input(&self.params, contents, failed, &helpers)?;
        let mut log = BandwidthLog { newcomers: r as u64, ..Default::default() };
        let mut new: Vec<Vec<Elem>> = vec![vec![0; self.alpha()]; failed.len()];
        let mut groups: Vec<Vec<Elem>> = Vec::with_capacity(failed.len());
        for (a, &i) in failed.iter().enumerate() {
            // Step 1: survivor j computes cell (i, j) from its own group.
            for &j in &survivors {
                let xj = &helper_content(contents, j)[j..j + k];
                new[a][self.offset(i, j)] = self.cell(i, j, xj);
                log.phase1_symbols += 1;
            }
            // Step 2: survivor j sends its stored cell (j, i); k of them pin down xᵢ.
            let rows: Vec<usize> = survivors.iter().map(|&j| h_row(j, i)).collect();
            let y: Vec<Elem> = survivors.iter().map(|&j| helper_content(contents, j)[self.offset(j, i)]).collect();
            log.phase1_symbols += survivors.len() as u64;
            let xi = self.h[i].select_rows(&rows).solve(&y).map_err(|_| Error::Singular)?;
            new[a][i..i + k].copy_from_slice(&xi);
            groups.push(xi);
        }
        // Step 3: newcomer i computes cell (i', i) for each other newcomer i'.
        for (a, &i) in failed.iter().enumerate() {
            for (b, &i2) in failed.iter().enumerate() {
                if a != b {
                    new[b][self.offset(i2, i)] = self.cell(i2, i, &groups[a]);
                    log.phase2_symbols += 1;
                }
            }
        }
        Ok((failed.iter().copied().zip(new).collect(), log))
    }

    /// `α × B` global encoding vectors of node `i`.
    pub fn node_matrix(&self, i: usize) -> Matrix {
        let (n, k) = (self.params.n, self.params.k);
        let mut m = Matrix::zeros(&self.field, self.alpha(), self.file_size());
        for j in 0..n {
            if j == i {
                for c in 0..k {
                    m.set(i + c, i * k + c, 1);
                }
            } else {
                let row = self.h[j].row(h_row(i, j));
                for c in 0..k {
                    m.set(self.offset(i, j), j * k + c, row[c]);
                }
            }
        }
        m
    }
}

/// The `n = 5`, `d = k = 3`, `r = 2` binary instance with every `H` equal to
/// `[e₁; e₂; e₃; 1 1 1]`.
pub fn table_code() -> MbcrCode {
    let f = Field::binary(1).expect("GF(2)");
    let h = Matrix::from_rows(&f, &[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1], vec![1, 1, 1]]).expect("shape");
    MbcrCode::new(SystemParams::new(5, 3, 3, 2).expect("valid"), f, vec![h; 5]).expect("valid code")
}

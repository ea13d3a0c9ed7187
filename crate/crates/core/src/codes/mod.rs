//! Exact-repair MSCR and MBCR constructions, random linear functional
//! repair, and the node-state file format.
//!
//! Node ids are 0-based throughout.

pub mod format;
pub mod mbcr;
pub mod mscr;
pub mod rlnc;

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{Elem, Field, Matrix};
use crate::params::SystemParams;

pub use mbcr::MbcrCode;
pub use mscr::MscrCode;
pub use rlnc::{RlncState, Transfer};

/// Rebuilt newcomers as `(id, contents)`.
pub type Rebuilt = Vec<(usize, Vec<Elem>)>;

/// Symbols moved during repairs: phase 1 is survivor → newcomer traffic,
/// phase 2 is newcomer ↔ newcomer exchange.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandwidthLog {
    pub phase1_symbols: u64,
    pub phase2_symbols: u64,
    pub newcomers: u64,
}

impl BandwidthLog {
    pub fn total(&self) -> u64 {
        self.phase1_symbols + self.phase2_symbols
    }

    /// Average symbols received per newcomer, if any newcomer was served.
    pub fn per_newcomer(&self) -> Option<u64> {
        (self.newcomers > 0).then(|| self.total() / self.newcomers)
    }
}

impl AddAssign for BandwidthLog {
    fn add_assign(&mut self, o: Self) {
        self.phase1_symbols += o.phase1_symbols;
        self.phase2_symbols += o.phase2_symbols;
        self.newcomers += o.newcomers;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Mscr,
    Mbcr,
    Rlnc,
}

impl Scheme {
    pub fn tag(self) -> u8 {
        match self {
            Scheme::Mscr => 0,
            Scheme::Mbcr => 1,
            Scheme::Rlnc => 2,
        }
    }

    pub fn from_tag(t: u8) -> Result<Self> {
        match t {
            0 => Ok(Scheme::Mscr),
            1 => Ok(Scheme::Mbcr),
            2 => Ok(Scheme::Rlnc),
            _ => Err(Error::Format(format!("unknown scheme tag {t}"))),
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mscr" => Ok(Scheme::Mscr),
            "mbcr" => Ok(Scheme::Mbcr),
            "rlnc" => Ok(Scheme::Rlnc),
            _ => Err(Error::Parse(format!("unknown scheme {s:?} (mscr, mbcr or rlnc)"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Mscr => "mscr",
            Scheme::Mbcr => "mbcr",
            Scheme::Rlnc => "rlnc",
        })
    }
}

/// Any of the three codes, behind one interface for encoding and decoding.
#[derive(Clone, Debug)]
pub enum Code {
    Mscr(MscrCode),
    Mbcr(MbcrCode),
    Rlnc(RlncState),
}

impl Code {
    pub fn scheme(&self) -> Scheme {
        match self {
            Code::Mscr(_) => Scheme::Mscr,
            Code::Mbcr(_) => Scheme::Mbcr,
            Code::Rlnc(_) => Scheme::Rlnc,
        }
    }

    pub fn params(&self) -> &SystemParams {
        match self {
            Code::Mscr(c) => &c.params,
            Code::Mbcr(c) => &c.params,
            Code::Rlnc(s) => &s.params,
        }
    }

    pub fn field(&self) -> &Field {
        match self {
            Code::Mscr(c) => &c.field,
            Code::Mbcr(c) => &c.field,
            Code::Rlnc(s) => &s.field,
        }
    }

    /// Symbols per node.
    pub fn alpha(&self) -> usize {
        match self {
            Code::Mscr(c) => c.alpha(),
            Code::Mbcr(c) => c.alpha(),
            Code::Rlnc(s) => s.alpha(),
        }
    }

    /// Symbols per chunk.
    pub fn file_size(&self) -> usize {
        match self {
            Code::Mscr(c) => c.file_size(),
            Code::Mbcr(c) => c.file_size(),
            Code::Rlnc(s) => s.file_size(),
        }
    }

    /// Per-newcomer repair bandwidth in symbols.
    pub fn gamma(&self) -> usize {
        match self {
            Code::Mscr(c) => c.gamma(),
            Code::Mbcr(c) => c.gamma(),
            Code::Rlnc(s) => s.gamma(),
        }
    }

    pub fn encode(&self, chunk: &[Elem]) -> Result<Vec<Vec<Elem>>> {
        match self {
            Code::Mscr(c) => c.encode(chunk),
            Code::Mbcr(c) => c.encode(chunk),
            Code::Rlnc(s) => s.encode(chunk),
        }
    }

    /// Recovers a chunk from `k` nodes given as `(id, contents)`.
    pub fn decode(&self, nodes: &[(usize, &[Elem])]) -> Result<Vec<Elem>> {
        match self {
            Code::Mscr(c) => c.decode(nodes),
            Code::Mbcr(c) => c.decode(nodes),
            Code::Rlnc(s) => s.decode(nodes),
        }
    }

    /// Global encoding vectors of node `i` (`α × B`).
    pub fn node_matrix(&self, i: usize) -> Matrix {
        match self {
            Code::Mscr(c) => c.node_matrix(i),
            Code::Mbcr(c) => c.node_matrix(i),
            Code::Rlnc(s) => s.matrices[i].clone(),
        }
    }
}

/// Builds the default code of a scheme: systematic generators for the exact
/// schemes, or an RLNC state at `profile` (the minimum-storage profile `q₀`
/// when `None`) sampled from `seed`.
pub fn build_code(
    scheme: Scheme,
    params: SystemParams,
    field: Field,
    profile: Option<crate::flowgraph::ProfileKind>,
    seed: u64,
) -> Result<Code> {
    Ok(match scheme {
        Scheme::Mscr => Code::Mscr(MscrCode::systematic(params, field)?),
        Scheme::Mbcr => Code::Mbcr(MbcrCode::systematic(params, field)?),
        Scheme::Rlnc => {
            let kind = profile.unwrap_or(crate::flowgraph::ProfileKind::SecondType(0));
            let prof = crate::flowgraph::profile(kind, &params)?;
            Code::Rlnc(rlnc::rlnc_init(params, prof.budget, prof, field, seed)?)
        }
    })
}

/// Checks that `nodes` names `k` distinct valid ids with `alpha` symbols each.
pub(crate) fn check_decode_input(p: &SystemParams, alpha: usize, nodes: &[(usize, &[Elem])]) -> Result<()> {
    if nodes.len() != p.k {
        return Err(Error::Precondition(format!("decoding needs k = {} nodes, got {}", p.k, nodes.len())));
    }
    let ids: Vec<usize> = nodes.iter().map(|(i, _)| *i).collect();
    if !crate::flowgraph::graph::distinct_in_range(&ids, p.n) {
        return Err(Error::Precondition(format!("node ids {ids:?} must be distinct and below n = {}", p.n)));
    }
    if let Some((i, c)) = nodes.iter().find(|(_, c)| c.len() != alpha) {
        return Err(Error::Dimension(format!("node {i} holds {} symbols, expected {alpha}", c.len())));
    }
    Ok(())
}

/// Validates a repair pattern: `r` distinct failures, each with `d` distinct
/// helpers drawn from the survivors, all of which are present in `contents`.
pub(crate) fn check_repair_input(
    p: &SystemParams,
    contents: &[Option<Vec<Elem>>],
    failed: &[usize],
    helpers: &[Vec<usize>],
) -> Result<()> {
    if contents.len() != p.n {
        return Err(Error::Dimension(format!("{} node slots, n = {}", contents.len(), p.n)));
    }
    crate::flowgraph::StageRepair { failed: failed.to_vec(), helpers: helpers.to_vec() }.validate(p)?;
    for h in helpers.iter().flatten() {
        if contents[*h].is_none() {
            return Err(Error::InvalidSchedule(format!("helper {h} holds no data")));
        }
    }
    Ok(())
}

/// Content of a helper already checked present.
pub(crate) fn helper_content(contents: &[Option<Vec<Elem>>], i: usize) -> &[Elem] {
    contents[i].as_deref().expect("helper presence checked")
}

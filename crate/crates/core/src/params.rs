//! System parameters, repair budgets and operating points.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith::Rational;
use crate::error::{Error, Result};

/// `(n, d, k, r)`: node count, repair degree, reconstruction degree and
/// number of nodes repaired together.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct SystemParams {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub r: usize,
}

#[derive(Deserialize)]
struct RawParams {
    n: usize,
    d: usize,
    k: usize,
    r: usize,
}

impl TryFrom<RawParams> for SystemParams {
    type Error = Error;
    fn try_from(p: RawParams) -> Result<Self> {
        SystemParams::new(p.n, p.d, p.k, p.r)
    }
}

impl SystemParams {
    pub fn new(n: usize, d: usize, k: usize, r: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParams(format!("k = {k}, need k >= 2")));
        }
        if r < 1 {
            return Err(Error::InvalidParams("r = 0, need r >= 1".into()));
        }
        if d < k {
            return Err(Error::InvalidParams(format!("d = {d} < k = {k}")));
        }
        if n < d + r {
            return Err(Error::InvalidParams(format!("n = {n} < d + r = {}", d + r)));
        }
        Ok(SystemParams { n, d, k, r })
    }

    /// Smallest admissible cluster, `n = d + r`.
    pub fn minimal(d: usize, k: usize, r: usize) -> Result<Self> {
        Self::new(d + r, d, k, r)
    }
}

impl fmt::Display for SystemParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, d={}, k={}, r={})", self.n, self.d, self.k, self.r)
    }
}

/// Integer storage and per-link traffic, all counted in symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RepairBudget {
    #[serde(rename = "B")]
    pub b: u64,
    pub alpha: u64,
    pub beta1: u64,
    pub beta2: u64,
}

impl RepairBudget {
    pub fn new(b: u64, alpha: u64, beta1: u64, beta2: u64) -> Result<Self> {
        if b == 0 || alpha == 0 {
            return Err(Error::InvalidParams("B and alpha must be positive".into()));
        }
        Ok(RepairBudget { b, alpha, beta1, beta2 })
    }

    /// Download per newcomer: `d·β₁ + (r−1)·β₂`.
    pub fn gamma(&self, p: &SystemParams) -> u64 {
        p.d as u64 * self.beta1 + (p.r as u64 - 1) * self.beta2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "index")]
pub enum PointKind {
    FirstType(usize),
    SecondType(usize),
    Mscr,
    Mbcr,
}

impl fmt::Display for PointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointKind::FirstType(j) => write!(f, "first:{j}"),
            PointKind::SecondType(l) => write!(f, "second:{l}"),
            PointKind::Mscr => f.write_str("mscr"),
            PointKind::Mbcr => f.write_str("mbcr"),
        }
    }
}

/// A normalized `(γ̃, α̃)` pair.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OperatingPoint {
    #[serde(rename = "gamma")]
    pub gamma_norm: Rational,
    #[serde(rename = "alpha")]
    pub alpha_norm: Rational,
    pub kind: PointKind,
}

impl OperatingPoint {
    pub fn new(gamma_norm: Rational, alpha_norm: Rational, kind: PointKind) -> Self {
        OperatingPoint { gamma_norm, alpha_norm, kind }
    }

    /// Same coordinates, ignoring the kind tag.
    pub fn same_coords(&self, other: &OperatingPoint) -> bool {
        self.gamma_norm == other.gamma_norm && self.alpha_norm == other.alpha_norm
    }
}

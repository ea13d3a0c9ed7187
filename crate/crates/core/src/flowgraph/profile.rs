//! Rank-accumulation profiles, majorization and the reduced Frank conditions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{RepairBudget, SystemParams};

/// `x` is majorized by `u`: sorted-descending prefix sums of `x` never exceed
/// those of `u`, and the totals agree.
pub fn majorized(x: &[u64], u: &[u64]) -> bool {
    if x.len() != u.len() {
        return false;
    }
    let mut xs = x.to_vec();
    let mut us = u.to_vec();
    xs.sort_unstable_by(|a, b| b.cmp(a));
    us.sort_unstable_by(|a, b| b.cmp(a));
    let (mut sx, mut su) = (0u64, 0u64);
    for (a, b) in xs.iter().zip(&us) {
        sx += a;
        su += b;
        if sx > su {
            return false;
        }
    }
    sx == su
}

/// Every integer vector majorized by `u`, in lexicographic order.
pub fn majorized_vectors(u: &[u64]) -> Vec<Vec<u64>> {
    let mut sorted = u.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let caps: Vec<u64> = sorted
        .iter()
        .scan(0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect();
    let mut out = Vec::new();
    extend_majorized(&mut Vec::with_capacity(u.len()), &sorted, &caps, &mut out);
    out
}

fn extend_majorized(cur: &mut Vec<u64>, sorted: &[u64], caps: &[u64], out: &mut Vec<Vec<u64>>) {
    let n = sorted.len();
    let total = caps.last().copied().unwrap_or(0);
    let used: u64 = cur.iter().sum();
    if cur.len() == n {
        if used == total {
            out.push(cur.clone());
        }
        return;
    }
    let slots_after = (n - cur.len() - 1) as u64;
    for v in 0..=sorted[0].min(total - used) {
        if used + v + slots_after * sorted[0] < total {
            continue;
        }
        cur.push(v);
        // The m largest entries chosen so far may not exceed the m largest of u.
        let mut part = cur.clone();
        part.sort_unstable_by(|a, b| b.cmp(a));
        let mut acc = 0;
        let within = part.iter().zip(caps).all(|(&x, &c)| {
            acc += x;
            acc <= c
        });
        if within {
            extend_majorized(cur, sorted, caps, out);
        }
        cur.pop();
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "index")]
pub enum ProfileKind {
    /// `p_z`, matched to first-type operating points.
    FirstType(usize),
    /// `q_ℓ`, matched to second-type operating points.
    SecondType(usize),
}

/// A non-increasing per-node rank prescription of length `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankProfile {
    pub entries: Vec<u64>,
    pub kind: ProfileKind,
    /// Storage, per-helper and per-partner traffic the profile is built for.
    pub budget: RepairBudget,
}

impl RankProfile {
    /// Sum of the `j` largest entries (`θ_j` or `φ_j`).
    pub fn prefix(&self, j: usize) -> u64 {
        self.entries.iter().take(j).sum()
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().sum()
    }
}

/// `p_z` with `α = 2(d−z)+r−1`, `β₁ = 2`, `β₂ = 1`, or
/// `q_ℓ` with `α = d−k+r(ℓ+1)`, `β₁ = β₂ = 1`.
pub fn profile(kind: ProfileKind, p: &SystemParams) -> Result<RankProfile> {
    let (n, d, k, r) = (p.n, p.d as u64, p.k, p.r);
    let (entries, alpha, beta1, beta2) = match kind {
        ProfileKind::FirstType(z) => {
            if z + 2 > k {
                return Err(Error::OutOfRange(format!("z = {z}, need z <= k-2 = {}", k - 2)));
            }
            let alpha = 2 * (d - z as u64) + r as u64 - 1;
            let mut e = vec![alpha; z + 1];
            e.extend((1..(k - z) as u64).map(|i| alpha - 2 * i));
            (e, alpha, 2, 1)
        }
        ProfileKind::SecondType(l) => {
            if l > k / r {
                return Err(Error::OutOfRange(format!("l = {l}, need l <= k/r = {}", k / r)));
            }
            let alpha = d - k as u64 + (r * (l + 1)) as u64;
            let mut e = vec![alpha; k - l * r];
            for i in 1..=l as u64 {
                e.extend(std::iter::repeat_n(alpha - i * r as u64, r));
            }
            (e, alpha, 1, 1)
        }
    };
    debug_assert_eq!(entries.len(), k);
    let mut entries = entries;
    entries.resize(n, 0);
    let b: u64 = entries.iter().sum();
    Ok(RankProfile { entries, kind, budget: RepairBudget { b, alpha, beta1, beta2 } })
}

/// `θ_{a+b} − θ_b ≤ a(2(d−b)⁺ + r − a)` for all `0 ≤ a ≤ r`, `0 ≤ b ≤ n−r`.
pub fn frank_condition_first(p: &SystemParams, z: usize) -> Result<bool> {
    let prof = profile(ProfileKind::FirstType(z), p)?;
    let r = p.r as i64;
    Ok((0..=p.r).all(|a| {
        (0..=p.n - p.r).all(|b| {
            let lhs = (prof.prefix(a + b) - prof.prefix(b)) as i64;
            let ai = a as i64;
            lhs <= ai * (2 * (p.d as i64 - b as i64).max(0) + r - ai)
        })
    }))
}

/// `φ_{a+b} − φ_b ≤ a((d−b)⁺ + r − a)` for all `0 ≤ a ≤ r`, `0 ≤ b ≤ d`.
pub fn frank_condition_second(p: &SystemParams, l: usize) -> Result<bool> {
    let prof = profile(ProfileKind::SecondType(l), p)?;
    let r = p.r as i64;
    Ok((0..=p.r).all(|a| {
        (0..=p.d).all(|b| {
            let lhs = (prof.prefix(a + b) - prof.prefix(b)) as i64;
            let ai = a as i64;
            lhs <= ai * ((p.d as i64 - b as i64).max(0) + r - ai)
        })
    }))
}

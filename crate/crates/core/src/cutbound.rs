//! Cut-set bounds and the parametric linear program over `(β̃₁, β̃₂)`.
//!
//! For fixed normalized storage `α̃`, each cut family yields a constraint
//! `1 ≤ (k−s)·α̃ + a₁·β̃₁ + a₂·β̃₂`. Minimizing `γ̃ = d·β̃₁ + (r−1)·β̃₂`
//! under these constraints is a two-variable LP, solved here exactly by
//! enumerating vertices.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith::{ExtendedRational, Rational};
use crate::error::{Error, Result};
use crate::params::{OperatingPoint, PointKind, RepairBudget, SystemParams};
use crate::tradeoff::{
    self, first_type_point, psi, second_type_denominator, second_type_point, takes_first_type,
};

/// `(ℓ₀, ℓ₁, …, ℓ_s)`: how many of the data collector's `k` nodes were last
/// repaired at each stage.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CutType {
    ells: Vec<usize>,
}

impl CutType {
    pub fn new(ells: Vec<usize>, p: &SystemParams) -> Result<Self> {
        if ells.is_empty() {
            return Err(Error::InvalidCutType("empty".into()));
        }
        if ells.iter().sum::<usize>() != p.k {
            return Err(Error::InvalidCutType(format!("{ells:?} does not sum to k = {}", p.k)));
        }
        if let Some(bad) = ells[1..].iter().find(|&&l| l == 0 || l > p.r) {
            return Err(Error::InvalidCutType(format!(
                "{ells:?}: stage count {bad} outside 1..={}",
                p.r
            )));
        }
        Ok(CutType { ells })
    }

    pub fn ells(&self) -> &[usize] {
        &self.ells
    }

    /// Number of repair stages `s`.
    pub fn stages(&self) -> usize {
        self.ells.len() - 1
    }
}

/// Every valid cut type for `(k, r)`.
pub fn enumerate_cut_types(p: &SystemParams) -> Vec<CutType> {
    fn compositions(rem: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rem == 0 {
            out.push(cur.clone());
            return;
        }
        for part in 1..=r.min(rem) {
            cur.push(part);
            compositions(rem - part, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for l0 in (0..=p.k).rev() {
        let mut tails = Vec::new();
        compositions(p.k - l0, p.r, &mut Vec::new(), &mut tails);
        for tail in tails {
            let mut ells = vec![l0];
            ells.extend(tail);
            out.push(CutType { ells });
        }
    }
    out
}

/// `ℓ₀α + ∑ⱼ [ℓⱼ(d − ∑_{i<j} ℓᵢ)β₁ + ℓⱼ(r − ℓⱼ)β₂]`.
pub fn cut_capacity(t: &CutType, b: &RepairBudget, p: &SystemParams) -> Result<u64> {
    let t = CutType::new(t.ells.clone(), p)?;
    let mut total = t.ells[0] as u64 * b.alpha;
    let mut before = t.ells[0];
    for &l in &t.ells[1..] {
        total += (l * (p.d - before)) as u64 * b.beta1 + (l * (p.r - l)) as u64 * b.beta2;
        before += l;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "family", content = "s")]
pub enum ConstraintId {
    /// Cut `(k−s, 1, …, 1)`.
    Chain(usize),
    /// Cut `(k−s, r, …, r, s mod r)`.
    Blocks(usize),
    Beta1NonNeg,
    Beta2NonNeg,
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintId::Chain(s) => write!(f, "chain:{s}"),
            ConstraintId::Blocks(s) => write!(f, "blocks:{s}"),
            ConstraintId::Beta1NonNeg => f.write_str("beta1>=0"),
            ConstraintId::Beta2NonNeg => f.write_str("beta2>=0"),
        }
    }
}

/// `rhs ≤ coeff_alpha·α̃ + coeff_beta1·β̃₁ + coeff_beta2·β̃₂`, with `rhs = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpConstraint {
    pub coeff_alpha: Rational,
    pub coeff_beta1: Rational,
    pub coeff_beta2: Rational,
    pub rhs: Rational,
    pub source: ConstraintId,
}

impl LpConstraint {
    /// Right-hand side after moving the `α̃` term across: `1 − (k−s)·α̃`.
    pub fn beta_rhs(&self, alpha: &Rational) -> Rational {
        &self.rhs - &(&self.coeff_alpha * alpha)
    }

    pub fn coeffs(&self) -> [Rational; 3] {
        [self.coeff_alpha.clone(), self.coeff_beta1.clone(), self.coeff_beta2.clone()]
    }
}

fn chain(s: usize, p: &SystemParams) -> LpConstraint {
    let (d, k, r, s) = (p.d as i64, p.k as i64, p.r as i64, s as i64);
    LpConstraint {
        coeff_alpha: Rational::from(k - s),
        coeff_beta1: Rational::from(s * (d - k)) + Rational::frac(s * (s + 1), 2),
        coeff_beta2: Rational::from(s * (r - 1)),
        rhs: Rational::one(),
        source: ConstraintId::Chain(s as usize),
    }
}

fn blocks(s: usize, p: &SystemParams) -> LpConstraint {
    let ps = psi(s as u64, p.r as u64) as i64;
    let (d, k, r, s) = (p.d as i64, p.k as i64, p.r as i64, s as i64);
    LpConstraint {
        coeff_alpha: Rational::from(k - s),
        coeff_beta1: Rational::from(s * (d - k)) + Rational::frac(s * s + ps, 2),
        coeff_beta2: Rational::from(s * r - ps),
        rhs: Rational::one(),
        source: ConstraintId::Blocks(s as usize),
    }
}

/// The `2k` constraints for `s = 1..=k`, block family before chain family
/// at each `s`. The `s = 0` bound `k·α̃ ≥ 1` is a feasibility gate instead.
pub fn constraints(p: &SystemParams) -> Vec<LpConstraint> {
    (1..=p.k).flat_map(|s| [blocks(s, p), chain(s, p)]).collect()
}

/// Coefficient rows `(α̃, β̃₁, β̃₂)` including the `s = 0` row, with repeated
/// rows removed.
pub fn constraint_matrix(p: &SystemParams) -> Vec<[Rational; 3]> {
    let mut rows = vec![[Rational::from(p.k), Rational::zero(), Rational::zero()]];
    for c in constraints(p) {
        let row = c.coeffs();
        if !rows.contains(&row) {
            rows.push(row);
        }
    }
    rows
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpSolution {
    pub alpha: Rational,
    pub beta1: Rational,
    pub beta2: Rational,
    pub gamma: Rational,
    pub tight: Vec<ConstraintId>,
}

impl LpSolution {
    /// The solution for a file of `b` symbols: every quantity times `b`.
    pub fn scaled(&self, b: &Rational) -> [Rational; 4] {
        [&self.alpha * b, &self.beta1 * b, &self.beta2 * b, &self.gamma * b]
    }
}

/// A line `a1·β̃₁ + a2·β̃₂ = c` bounding the feasible half-plane `≥ c`.
#[derive(Clone, Debug)]
struct HalfPlane {
    a1: Rational,
    a2: Rational,
    c: Rational,
}

impl HalfPlane {
    fn holds(&self, b1: &Rational, b2: &Rational) -> bool {
        &(&self.a1 * b1) + &(&self.a2 * b2) >= self.c
    }
}

fn intersect(x: &HalfPlane, y: &HalfPlane) -> Option<(Rational, Rational)> {
    let det = &(&x.a1 * &y.a2) - &(&x.a2 * &y.a1);
    if det.is_zero() {
        return None;
    }
    let b1 = (&(&x.c * &y.a2) - &(&y.c * &x.a2)) / &det;
    let b2 = (&(&x.a1 * &y.c) - &(&y.a1 * &x.c)) / &det;
    Some((b1, b2))
}

/// Exact minimum of `d·β̃₁ + (r−1)·β̃₂` at storage `α̃`.
///
/// Candidates are all pairwise intersections of constraint lines and the two
/// axes. Among optimal candidates the lexicographically smallest `(β̃₁, β̃₂)`
/// wins, which yields `β̃₂ = 0` when `r = 1`.
pub fn lp_min_gamma(p: &SystemParams, alpha: &Rational) -> Result<LpSolution> {
    if alpha * Rational::from(p.k) < Rational::one() {
        return Err(Error::Infeasible(format!("alpha = {alpha} is below 1/k")));
    }
    let all = constraints(p);
    let (beta1, beta2) =
        optimum_small(p, &all, alpha).unwrap_or_else(|| optimum_exact(p, &all, alpha));
    let gamma = &(&Rational::from(p.d) * &beta1) + &(&Rational::from(p.r - 1) * &beta2);

    let mut tight: Vec<ConstraintId> = all
        .iter()
        .filter(|con| {
            &(&con.coeff_beta1 * &beta1) + &(&con.coeff_beta2 * &beta2) == con.beta_rhs(alpha)
        })
        .map(|con| con.source)
        .collect();
    if beta1.is_zero() {
        tight.push(ConstraintId::Beta1NonNeg);
    }
    if beta2.is_zero() {
        tight.push(ConstraintId::Beta2NonNeg);
    }
    Ok(LpSolution { alpha: alpha.clone(), beta1, beta2, gamma, tight })
}

/// Vertex enumeration in arbitrary precision.
fn optimum_exact(p: &SystemParams, all: &[LpConstraint], alpha: &Rational) -> (Rational, Rational) {
    let mut active: Vec<HalfPlane> = Vec::new();
    for con in all {
        let c = con.beta_rhs(alpha);
        // Non-positive right-hand sides hold everywhere in the quadrant.
        if !c.is_positive() {
            continue;
        }
        let hp = HalfPlane { a1: con.coeff_beta1.clone(), a2: con.coeff_beta2.clone(), c };
        if !active.iter().any(|h| h.a1 == hp.a1 && h.a2 == hp.a2 && h.c == hp.c) {
            active.push(hp);
        }
    }
    let mut lines = active.clone();
    lines.push(HalfPlane { a1: Rational::one(), a2: Rational::zero(), c: Rational::zero() });
    lines.push(HalfPlane { a1: Rational::zero(), a2: Rational::one(), c: Rational::zero() });

    let (wd, wr) = (Rational::from(p.d), Rational::from(p.r - 1));
    let mut best: Option<(Rational, Rational, Rational)> = None;
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let Some((b1, b2)) = intersect(&lines[i], &lines[j]) else { continue };
            if b1.is_negative() || b2.is_negative() {
                continue;
            }
            let obj = &(&wd * &b1) + &(&wr * &b2);
            if let Some((bo, bb1, bb2)) = &best {
                if (&obj, &b1, &b2) >= (bo, bb1, bb2) {
                    continue;
                }
            }
            if active.iter().all(|h| h.holds(&b1, &b2)) {
                best = Some((obj, b1, b2));
            }
        }
    }
    let (_, b1, b2) = best.expect("LP is feasible for alpha >= 1/k");
    (b1, b2)
}

/// The same enumeration after clearing `α̃`'s denominator, in checked `i128`
/// integer arithmetic. Returns `None` if any quantity would overflow.
fn optimum_small(
    p: &SystemParams,
    all: &[LpConstraint],
    alpha: &Rational,
) -> Option<(Rational, Rational)> {
    let an = i128::try_from(alpha.numer()).ok()?;
    let ad = i128::try_from(alpha.denom()).ok()?;
    let int = |x: &Rational| -> Option<i128> {
        if x.is_integer() {
            i128::try_from(x.numer()).ok()
        } else {
            None
        }
    };
    // (a1, a2, c) with a1·x + a2·y ≥ c, all scaled by ad.
    let mut active: Vec<[i128; 3]> = Vec::new();
    for con in all {
        let c = ad.checked_sub(int(&con.coeff_alpha)?.checked_mul(an)?)?;
        if c <= 0 {
            continue;
        }
        let row = [int(&con.coeff_beta1)?, int(&con.coeff_beta2)?, c];
        if !active.contains(&row) {
            active.push(row);
        }
    }
    let mut lines = active.clone();
    lines.push([1, 0, 0]);
    lines.push([0, 1, 0]);

    let (wd, wr) = (p.d as i128, p.r as i128 - 1);
    // Candidate as (x, y, den) with den > 0.
    let mut best: Option<(i128, i128, i128, i128)> = None;
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let ([a1, a2, c], [b1, b2, e]) = (lines[i], lines[j]);
            let mut det = a1.checked_mul(b2)?.checked_sub(a2.checked_mul(b1)?)?;
            if det == 0 {
                continue;
            }
            let mut x = c.checked_mul(b2)?.checked_sub(e.checked_mul(a2)?)?;
            let mut y = a1.checked_mul(e)?.checked_sub(b1.checked_mul(c)?)?;
            if det < 0 {
                det = -det;
                x = -x;
                y = -y;
            }
            if x < 0 || y < 0 {
                continue;
            }
            let obj = wd.checked_mul(x)?.checked_add(wr.checked_mul(y)?)?;
            if let Some((bo, bx, by, bden)) = best {
                let key = (obj.checked_mul(bden)?, x.checked_mul(bden)?, y.checked_mul(bden)?);
                let old = (bo.checked_mul(det)?, bx.checked_mul(det)?, by.checked_mul(det)?);
                if key >= old {
                    continue;
                }
            }
            let mut feasible = true;
            for &[h1, h2, hc] in &active {
                let lhs = h1.checked_mul(x)?.checked_add(h2.checked_mul(y)?)?;
                if lhs < hc.checked_mul(det)? {
                    feasible = false;
                    break;
                }
            }
            if feasible {
                best = Some((obj, x, y, det));
            }
        }
    }
    let (_, x, y, den) = best?;
    let den = Rational::from_int(den) * Rational::from_int(ad);
    Some((Rational::from_int(x) / &den, Rational::from_int(y) / &den))
}

/// Gradient `(a₁, a₂)` of a constraint in the `β̃₁-β̃₂` plane.
pub fn constraint_gradient(id: ConstraintId, p: &SystemParams) -> (Rational, Rational) {
    match id {
        ConstraintId::Chain(s) => {
            let c = chain(s, p);
            (c.coeff_beta1, c.coeff_beta2)
        }
        ConstraintId::Blocks(s) => {
            let c = blocks(s, p);
            (c.coeff_beta1, c.coeff_beta2)
        }
        ConstraintId::Beta1NonNeg => (Rational::one(), Rational::zero()),
        ConstraintId::Beta2NonNeg => (Rational::zero(), Rational::one()),
    }
}

/// `a₁/a₂` as an extended rational (`+∞` for vertical lines).
fn slope_ratio(a1: &Rational, a2: &Rational) -> ExtendedRational {
    if a2.is_zero() {
        ExtendedRational::PosInfinity
    } else {
        ExtendedRational::Finite(a1 / a2)
    }
}

/// Two tight constraints whose slope ratios sandwich the objective's `d/(r−1)`,
/// which certifies optimality of `sol` by LP duality.
pub fn dual_certificate(sol: &LpSolution, p: &SystemParams) -> Option<(ConstraintId, ConstraintId)> {
    let target = slope_ratio(&Rational::from(p.d), &Rational::from(p.r - 1));
    let ratios: Vec<(ConstraintId, ExtendedRational)> = sol
        .tight
        .iter()
        .map(|&id| {
            let (a1, a2) = constraint_gradient(id, p);
            (id, slope_ratio(&a1, &a2))
        })
        .collect();
    for (hi_id, hi) in &ratios {
        if hi < &target {
            continue;
        }
        for (lo_id, lo) in &ratios {
            if lo <= &target {
                return Some((*hi_id, *lo_id));
            }
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineKind {
    /// Block-family line `L_j`.
    L,
    /// Chain-family line `L'_j`.
    LPrime,
}

/// `(a₁, a₂, c)` of `a₁·β̃₁ + a₂·β̃₂ = c` for `L_j(α̃)` or `L'_j(α̃)`.
pub fn line_coeffs(
    j: usize,
    kind: LineKind,
    alpha: &Rational,
    p: &SystemParams,
) -> (Rational, Rational, Rational) {
    assert!((1..=p.k).contains(&j), "line_coeffs: j = {j} out of range");
    let con = match kind {
        LineKind::L => blocks(j, p),
        LineKind::LPrime => chain(j, p),
    };
    let c = con.beta_rhs(alpha);
    (con.coeff_beta1, con.coeff_beta2, c)
}

/// Slope magnitude `a₁/a₂` of a line, `+∞` when vertical.
pub fn line_slope(j: usize, kind: LineKind, p: &SystemParams) -> ExtendedRational {
    let (a1, a2, _) = line_coeffs(j, kind, &Rational::zero(), p);
    slope_ratio(&a1, &a2)
}

/// `g_j(α̃) = (1 − (k−j)α̃) / (j(2d − 2k + r + j))`.
pub fn g(j: usize, alpha: &Rational, p: &SystemParams) -> Rational {
    let (d, k, r, jj) = (p.d as i64, p.k as i64, p.r as i64, j as i64);
    (Rational::one() - &(Rational::from(k - jj) * alpha)) / Rational::from(jj * (2 * d - 2 * k + r + jj))
}

/// `P_j(α̃) = g_j(α̃)·(2, 1)`, the meeting point of `L_j` and `L'_j`.
pub fn point_p(j: usize, alpha: &Rational, p: &SystemParams) -> (Rational, Rational) {
    assert!((1..=p.k).contains(&j), "point_p: j = {j} out of range");
    let y = g(j, alpha, p);
    (&y * 2, y)
}

/// `Q_ℓ = (1/D'_ℓ, 1/D'_ℓ)`.
pub fn point_q(l: usize, p: &SystemParams) -> (Rational, Rational) {
    assert!(l <= p.k / p.r, "point_q: l = {l} exceeds k/r");
    let v = second_type_denominator(l, p).recip().expect("D' > 0");
    (v.clone(), v)
}

/// Optimal `(β̃₁, β̃₂)` at a corner point: `β̃₁ = 2β̃₂` for first-type points,
/// `β̃₁ = β̃₂` for second-type points.
pub fn corner_betas(pt: &OperatingPoint, p: &SystemParams) -> (Rational, Rational) {
    match pt.kind {
        PointKind::FirstType(_) | PointKind::Mbcr => {
            let b2 = &pt.gamma_norm / Rational::from(2 * p.d + p.r - 1);
            (&b2 * 2, b2)
        }
        PointKind::SecondType(_) | PointKind::Mscr => {
            let b = &pt.gamma_norm / Rational::from(p.d + p.r - 1);
            (b.clone(), b)
        }
    }
}

/// Corner points of `γ̃*(α̃)`, ordered by increasing `α̃`.
pub fn corner_points(p: &SystemParams) -> Vec<OperatingPoint> {
    let mut pts = vec![second_type_point(0, p)];
    for j in 2..p.k {
        let pt = if takes_first_type(j, p) {
            first_type_point(j, p)
        } else {
            second_type_point(j / p.r, p)
        };
        if !pts.iter().any(|q| q.same_coords(&pt)) {
            pts.push(pt);
        }
    }
    let mbcr = first_type_point(p.k, p);
    if !pts.iter().any(|q| q.same_coords(&mbcr)) {
        pts.push(mbcr);
    }
    pts.sort_by(tradeoff::cmp_points);
    // A theorem point on a straight stretch of the curve is not a corner.
    let mut out: Vec<OperatingPoint> = Vec::with_capacity(pts.len());
    for pt in pts {
        while out.len() >= 2 && tradeoff::collinear(&out[out.len() - 2], &out[out.len() - 1], &pt) {
            out.pop();
        }
        out.push(pt);
    }
    out
}

/// The upper envelope `max_j (m_j·x + b_j)` of lines with strictly
/// increasing, non-positive slopes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope {
    lines: Vec<(Rational, Rational)>,
    breakpoints: Vec<Rational>,
}

/// Builds the envelope; line `i` is the maximum on `[x_i, x_{i+1})`.
///
/// Slopes must be strictly increasing and `≤ 0`, and consecutive crossing
/// points strictly increasing. The last line may be flat.
pub fn lower_envelope(lines: &[(Rational, Rational)]) -> Result<Envelope> {
    if lines.is_empty() {
        return Err(Error::Precondition("no lines".into()));
    }
    if lines.iter().any(|(m, _)| m.is_positive()) {
        return Err(Error::Precondition("positive slope".into()));
    }
    let mut breakpoints = Vec::with_capacity(lines.len().saturating_sub(1));
    for w in lines.windows(2) {
        let ((m0, b0), (m1, b1)) = (&w[0], &w[1]);
        if m0 >= m1 {
            return Err(Error::Precondition("slopes not strictly increasing".into()));
        }
        let x = (b0 - b1) / (m1 - m0);
        if breakpoints.last().is_some_and(|last| &x <= last) {
            return Err(Error::Precondition("crossings not strictly increasing".into()));
        }
        breakpoints.push(x);
    }
    Ok(Envelope { lines: lines.to_vec(), breakpoints })
}

impl Envelope {
    /// Crossing points `x₂ < … < x_N`.
    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    /// Index of the line attaining the maximum at `x`.
    pub fn active(&self, x: &Rational) -> usize {
        self.breakpoints.iter().take_while(|b| *b <= x).count()
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let (m, b) = &self.lines[self.active(x)];
        &(m * x) + b
    }
}

/// `β̂₂(α̃) = max_j g_j(α̃)` as an envelope; its breakpoints are `α̃₂ < … < α̃_k`.
pub fn g_envelope(p: &SystemParams) -> Result<Envelope> {
    let lines: Vec<(Rational, Rational)> = (1..=p.k)
        .map(|j| {
            let b = g(j, &Rational::zero(), p);
            let m = g(j, &Rational::one(), p) - &b;
            (m, b)
        })
        .collect();
    lower_envelope(&lines)
}

/// Does the point satisfy every constraint at its own `α̃`?
pub fn satisfies_all(p: &SystemParams, alpha: &Rational, b1: &Rational, b2: &Rational) -> bool {
    constraints(p)
        .iter()
        .all(|c| &(&c.coeff_beta1 * b1) + &(&c.coeff_beta2 * b2) >= c.beta_rhs(alpha))
}

/// Constraints met with equality.
pub fn tight_at(p: &SystemParams, alpha: &Rational, b1: &Rational, b2: &Rational) -> Vec<ConstraintId> {
    constraints(p)
        .iter()
        .filter(|c| &(&c.coeff_beta1 * b1) + &(&c.coeff_beta2 * b2) == c.beta_rhs(alpha))
        .map(|c| c.source)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tradeoff::mu;
    use proptest::prelude::*;

    fn params(d: usize, k: usize, r: usize) -> SystemParams {
        SystemParams::minimal(d, k, r).unwrap()
    }

    fn q(n: i64, d: i64) -> Rational {
        Rational::frac(n, d)
    }

    #[test]
    fn cut_capacity_examples() {
        let p = params(6, 6, 2);
        let unit = RepairBudget::new(1, 1, 1, 1).unwrap();
        let t = CutType::new(vec![2, 1, 1, 2], &p).unwrap();
        // 2·1 + [1·4 + 1·1] + [1·3 + 1·1] + [2·2 + 2·0]
        assert_eq!(cut_capacity(&t, &unit, &p).unwrap(), 15);

        let p = params(5, 4, 3);
        let b = RepairBudget::new(1, 7, 3, 2).unwrap();
        let all = CutType::new(vec![4], &p).unwrap();
        assert_eq!(cut_capacity(&all, &b, &p).unwrap(), 4 * 7);
        let one = CutType::new(vec![3, 1], &p).unwrap();
        assert_eq!(cut_capacity(&one, &b, &p).unwrap(), 3 * 7 + 2 * 3 + 2 * 2);
    }

    #[test]
    fn cut_type_validation() {
        let p = params(5, 4, 3);
        assert!(CutType::new(vec![0, 4], &p).is_err());
        assert!(CutType::new(vec![1, 0, 3], &p).is_err());
        assert!(CutType::new(vec![1, 2], &p).is_err());
        assert!(CutType::new(vec![0, 3, 1], &p).is_ok());
    }

    #[test]
    fn cut_type_enumeration_count() {
        // Compositions of m with parts ≤ r, summed over ℓ₀.
        fn count(m: usize, r: usize) -> usize {
            if m == 0 {
                1
            } else {
                (1..=r.min(m)).map(|x| count(m - x, r)).sum()
            }
        }
        for (d, k, r) in [(5, 4, 3), (6, 6, 2), (4, 3, 1)] {
            let p = params(d, k, r);
            let want: usize = (0..=k).map(|l0| count(k - l0, r)).sum();
            let got = enumerate_cut_types(&p);
            assert_eq!(got.len(), want);
            assert!(got.iter().all(|t| CutType::new(t.ells().to_vec(), &p).is_ok()));
        }
    }

    #[test]
    fn matrix_543() {
        let rows = constraint_matrix(&params(5, 4, 3));
        let want: [[i64; 3]; 8] = [
            [4, 0, 0],
            [3, 2, 2],
            [2, 6, 2],
            [2, 5, 4],
            [1, 12, 0],
            [1, 9, 6],
            [0, 17, 2],
            [0, 14, 8],
        ];
        let want: Vec<[Rational; 3]> =
            want.iter().map(|r| r.map(Rational::from)).collect();
        assert_eq!(rows, want);
    }

    #[test]
    fn first_cut_rows_agree() {
        for (d, k, r) in [(5, 4, 3), (7, 3, 1), (9, 6, 4)] {
            let p = params(d, k, r);
            let cs = constraints(&p);
            assert_eq!(cs.len(), 2 * k);
            let want = [
                Rational::from(k - 1),
                Rational::from(d - k + 1),
                Rational::from(r - 1),
            ];
            assert_eq!(cs[0].coeffs(), want);
            assert_eq!(cs[1].coeffs(), want);
        }
    }

    #[test]
    fn r1_has_no_beta2() {
        let cs = constraints(&params(6, 4, 1));
        assert!(cs.iter().all(|c| c.coeff_beta2.is_zero()));
    }

    #[test]
    fn coefficients_nonnegative() {
        for k in 2..=8 {
            for d in k..=k + 4 {
                for r in 1..=5 {
                    for c in constraints(&params(d, k, r)) {
                        assert!(c.coeffs().iter().all(|x| !x.is_negative()));
                    }
                }
            }
        }
    }

    #[test]
    fn lp_543_at_quarter() {
        let p = params(5, 4, 3);
        let sol = lp_min_gamma(&p, &q(1, 4)).unwrap();
        assert_eq!((sol.beta1.clone(), sol.beta2.clone()), (q(1, 16), q(1, 16)));
        assert_eq!(sol.gamma, q(7, 16));
        let [a, b1, b2, g] = sol.scaled(&Rational::from(10));
        assert_eq!(a, q(5, 2));
        assert_eq!(b1, q(5, 8));
        assert_eq!(b2, q(5, 8));
        assert_eq!(g, q(35, 8));
    }

    #[test]
    fn lp_intro_example() {
        let p = params(2, 2, 2);
        let sol = lp_min_gamma(&p, &q(1, 2)).unwrap();
        let [_, b1, b2, g] = sol.scaled(&Rational::from(4));
        assert_eq!((b1, b2, g), (Rational::one(), Rational::one(), Rational::from(3)));
    }

    #[test]
    fn lp_below_one_over_k_is_infeasible() {
        let p = params(5, 4, 3);
        assert!(matches!(lp_min_gamma(&p, &q(1, 5)), Err(Error::Infeasible(_))));
    }

    #[test]
    fn lp_at_mbcr_storage() {
        for (d, k, r) in [(5, 4, 3), (6, 3, 2), (4, 4, 1), (9, 7, 4)] {
            let p = params(d, k, r);
            let m = Rational::from(2 * d + r - 1) / Rational::from(k * (2 * d + r - k));
            assert_eq!(lp_min_gamma(&p, &m).unwrap().gamma, m);
            let beyond = &m * 3;
            assert_eq!(lp_min_gamma(&p, &beyond).unwrap().gamma, m);
        }
    }

    #[test]
    fn lp_r1_reports_zero_beta2() {
        let p = params(5, 4, 1);
        for a in [q(1, 4), q(3, 10), q(1, 2)] {
            assert!(lp_min_gamma(&p, &a).unwrap().beta2.is_zero());
        }
    }

    #[test]
    fn line_slopes() {
        for (d, k, r) in [(5, 4, 3), (19, 18, 3), (8, 6, 4)] {
            let p = params(d, k, r);
            let objective = Rational::from(d) / Rational::from(r - 1);
            for j in 1..=k {
                assert_eq!(line_slope(j, LineKind::L, &p), mu(j, &p));
                let lp = line_slope(j, LineKind::LPrime, &p);
                let want = (Rational::from(d as i64 - k as i64) + Rational::frac(j as i64 + 1, 2))
                    / Rational::from(r - 1);
                assert_eq!(lp, ExtendedRational::Finite(want));
                assert!(lp < ExtendedRational::Finite(objective.clone()));
            }
            let a = q(1, 4);
            assert_eq!(
                line_coeffs(1, LineKind::L, &a, &p),
                line_coeffs(1, LineKind::LPrime, &a, &p)
            );
            assert!(mu(k, &p) > ExtendedRational::Finite(objective));
        }
    }

    #[test]
    fn p_points_543() {
        let p = params(5, 4, 3);
        let a = q(1, 4);
        assert_eq!(point_p(1, &a, &p), (q(1, 12), q(1, 24)));
        assert_eq!(point_p(2, &a, &p), (q(1, 14), q(1, 28)));
        assert_eq!(point_p(4, &a, &p), (q(1, 18), q(1, 36)));
        for j in 1..=4 {
            let (b1, b2) = point_p(j, &a, &p);
            for kind in [LineKind::L, LineKind::LPrime] {
                let (a1, a2, c) = line_coeffs(j, kind, &a, &p);
                assert_eq!(&(&a1 * &b1) + &(&a2 * &b2), c, "j={j} {kind:?}");
            }
        }
    }

    #[test]
    fn q_points() {
        assert_eq!(point_q(1, &params(19, 18, 3)), (q(1, 117), q(1, 117)));
        for (d, k, r) in [(5, 4, 3), (6, 2, 2)] {
            let v = Rational::one() / Rational::from(k * (d + r - k));
            assert_eq!(point_q(0, &params(d, k, r)), (v.clone(), v));
        }
    }

    #[test]
    fn q_common_intersection() {
        for (d, k, r) in [(5, 4, 3), (19, 18, 3), (9, 8, 2), (7, 7, 3)] {
            let p = params(d, k, r);
            for l in 0..=k / r {
                let alpha = second_type_point(l, &p).alpha_norm;
                let (b1, b2) = point_q(l, &p);
                for j in (l * r).max(1)..=((l + 1) * r).min(k) {
                    let (a1, a2, c) = line_coeffs(j, LineKind::L, &alpha, &p);
                    assert_eq!(&(&a1 * &b1) + &(&a2 * &b2), c, "{p} l={l} j={j}");
                }
            }
        }
    }

    #[test]
    fn corner_points_543() {
        let pts = corner_points(&params(5, 4, 3));
        let got: Vec<_> = pts.iter().map(|p| (p.gamma_norm.clone(), p.alpha_norm.clone())).collect();
        assert_eq!(
            got,
            vec![(q(7, 16), q(1, 4)), (q(6, 15), q(4, 15)), (q(6, 17), q(5, 17)), (q(1, 3), q(1, 3))]
        );
    }

    #[test]
    fn corner_points_match_curve() {
        for k in 2..=9 {
            for d in k..=k + 5 {
                for r in 1..=6 {
                    let p = params(d, k, r);
                    let curve = tradeoff::build_curve(&p);
                    assert_eq!(corner_points(&p), curve.vertices, "{p}");
                }
            }
        }
    }

    #[test]
    fn collinear_theorem_point_is_not_a_corner() {
        let p = SystemParams::minimal(3, 3, 4).unwrap();
        // the first-type point for j = 2 lies on the segment between the ends
        let mid = tradeoff::first_type_point(2, &p);
        assert_eq!((mid.gamma_norm.clone(), mid.alpha_norm.clone()), (q(9, 19), q(7, 19)));
        assert_eq!(tradeoff::build_curve(&p).vertices.len(), 2);
        let got: Vec<_> = corner_points(&p).iter().map(|c| (c.gamma_norm.clone(), c.alpha_norm.clone())).collect();
        assert_eq!(got, vec![(q(1, 2), q(1, 3)), (q(3, 7), q(3, 7))]);
    }

    #[test]
    fn corner_points_are_lp_optimal_with_prescribed_betas() {
        for k in 2..=7 {
            for d in k..=k + 3 {
                for r in 1..=4 {
                    let p = params(d, k, r);
                    for pt in corner_points(&p) {
                        let (b1, b2) = corner_betas(&pt, &p);
                        assert!(satisfies_all(&p, &pt.alpha_norm, &b1, &b2), "{p} {pt:?}");
                        assert!(!tight_at(&p, &pt.alpha_norm, &b1, &b2).is_empty());
                        let sol = lp_min_gamma(&p, &pt.alpha_norm).unwrap();
                        assert_eq!(sol.gamma, pt.gamma_norm, "{p} {pt:?}");
                        // At d = (r−1)μ(j) the objective is parallel to L_j and the
                        // optimizer is a segment; elsewhere it is unique.
                        let tie = match pt.kind {
                            PointKind::FirstType(j) => {
                                mu(j, &p).scale(&Rational::from(r - 1))
                                    == ExtendedRational::Finite(Rational::from(d))
                            }
                            _ => false,
                        };
                        if r > 1 && !tie {
                            assert_eq!((sol.beta1, sol.beta2), (b1, b2), "{p} {pt:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn alpha_orderings() {
        for k in 2..=9 {
            for d in k..=k + 4 {
                for r in 1..=5 {
                    let p = params(d, k, r);
                    let a: Vec<Rational> =
                        (1..=k).map(|j| first_type_point(j, &p).alpha_norm).collect();
                    assert_eq!(a[0], Rational::frac(1, k as i64));
                    assert!(a.windows(2).all(|w| w[0] < w[1]));
                    for l in 0..k / r {
                        let ap = second_type_point(l, &p).alpha_norm;
                        if r == 1 {
                            // Single-node repair: the second-type points are first-type ones.
                            assert_eq!(ap, a[l], "{p} l={l}");
                            continue;
                        }
                        if l > 0 {
                            assert!(a[l * r - 1] < ap, "{p} l={l}");
                        }
                        assert!(ap < a[(l + 1) * r - 1], "{p} l={l}");
                    }
                }
            }
        }
    }

    #[test]
    fn g_envelope_breakpoints_are_first_type_alphas() {
        for (d, k, r) in [(5, 4, 3), (8, 6, 2), (4, 4, 1)] {
            let p = params(d, k, r);
            let env = g_envelope(&p).unwrap();
            let want: Vec<Rational> = (2..=k).map(|j| first_type_point(j, &p).alpha_norm).collect();
            assert_eq!(env.breakpoints(), &want[..]);
        }
    }

    #[test]
    fn envelope_small_cases() {
        let single = lower_envelope(&[(q(-1, 1), q(3, 1))]).unwrap();
        assert_eq!(single.eval(&q(2, 1)), q(1, 1));
        assert!(single.breakpoints().is_empty());

        let two = lower_envelope(&[(q(-2, 1), q(4, 1)), (q(-1, 1), q(3, 1))]).unwrap();
        assert_eq!(two.breakpoints(), &[q(1, 1)]);
        assert_eq!(two.active(&q(1, 2)), 0);
        assert_eq!(two.active(&q(1, 1)), 1);
        assert_eq!(two.eval(&q(0, 1)), q(4, 1));
        assert_eq!(two.eval(&q(2, 1)), q(1, 1));

        assert!(lower_envelope(&[]).is_err());
        assert!(lower_envelope(&[(q(-1, 1), q(0, 1)), (q(-2, 1), q(0, 1))]).is_err());
        assert!(lower_envelope(&[(q(1, 1), q(0, 1))]).is_err());
        // Crossings at x = 1 then x = 0: out of order.
        let bad = [(q(-3, 1), q(3, 1)), (q(-2, 1), q(2, 1)), (q(-1, 1), q(2, 1))];
        assert!(lower_envelope(&bad).is_err());
    }

    fn lp_params() -> impl Strategy<Value = (SystemParams, Rational)> {
        (2usize..=6, 0usize..=3, 1usize..=4, 0i64..=60).prop_map(|(k, dd, r, t)| {
            let p = params(k + dd, k, r);
            // α̃ from 1/k up to twice the MBCR storage.
            let lo = Rational::frac(1, k as i64);
            let hi = tradeoff::mbcr_point(&p).alpha_norm * 2;
            let a = &lo + &((&hi - &lo) * Rational::frac(t, 60));
            (p, a)
        })
    }

    proptest! {
        #[test]
        fn lp_optimum_has_dual_certificate((p, a) in lp_params()) {
            let sol = lp_min_gamma(&p, &a).unwrap();
            prop_assert!(satisfies_all(&p, &a, &sol.beta1, &sol.beta2));
            prop_assert_eq!(
                &sol.gamma,
                &(&(&sol.beta1 * Rational::from(p.d)) + &(&sol.beta2 * Rational::from(p.r - 1)))
            );
            prop_assert!(dual_certificate(&sol, &p).is_some(), "{:?}", sol);
        }

        #[test]
        fn integer_and_exact_paths_agree((p, a) in lp_params()) {
            let all = constraints(&p);
            prop_assert_eq!(optimum_small(&p, &all, &a), Some(optimum_exact(&p, &all, &a)));
        }

        #[test]
        fn lp_value_matches_curve((p, a) in lp_params()) {
            let sol = lp_min_gamma(&p, &a).unwrap();
            prop_assert_eq!(Some(sol.gamma), tradeoff::build_curve(&p).gamma_at(&a));
        }

        #[test]
        fn gamma_star_monotone_convex(k in 2usize..=6, dd in 0usize..=3, r in 1usize..=4) {
            let p = params(k + dd, k, r);
            let lo = Rational::frac(1, k as i64);
            let hi = tradeoff::mbcr_point(&p).alpha_norm * 2;
            let step = (&hi - &lo) / Rational::from(40);
            let vals: Vec<Rational> = (0..=40)
                .map(|i| lp_min_gamma(&p, &(&lo + &(&step * Rational::from(i)))).unwrap().gamma)
                .collect();
            prop_assert!(vals.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(vals.windows(3).all(|w| &w[0] + &w[2] >= &w[1] * 2));
        }
    }
}

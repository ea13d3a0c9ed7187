//! Closed-form operating points and the optimal storage/repair-bandwidth curve.
//!
//! Coordinates are normalized by the file size: `γ̃ = γ/B`, `α̃ = α/B`.
//! The curve runs from the MSCR point (least storage) to the MBCR point
//! (least repair traffic); beyond these it continues as two rays.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::arith::{ExtendedRational, Rational};
use crate::params::{OperatingPoint, PointKind, SystemParams};

/// `⌊j/m⌋·m² + (j mod m)²`, the largest `∑xᵢ²` over integers
/// `0 ≤ xᵢ ≤ m` summing to `j`.
pub fn psi(j: u64, m: u64) -> u64 {
    assert!(m > 0, "psi: m must be positive");
    let q = j / m;
    let rem = j - q * m;
    q * m * m + rem * rem
}

/// Slope magnitude `μ(j)` of the block-constraint line `L_j`; `+∞` when `r | j`.
pub fn mu(j: usize, p: &SystemParams) -> ExtendedRational {
    assert!(j <= p.k, "mu: j = {j} exceeds k = {}", p.k);
    if j == 0 {
        return Rational::zero().into();
    }
    let (j64, r64) = (j as u64, p.r as u64);
    let ps = psi(j64, r64);
    let denom = j64 * r64 - ps;
    if denom == 0 {
        return ExtendedRational::PosInfinity;
    }
    let dk = p.d as i64 - p.k as i64;
    let num = Rational::from(j as i64 * dk) + Rational::frac((j64 * j64 + ps) as i64, 2);
    ExtendedRational::Finite(num / Rational::from(denom as i64))
}

fn half(x: i64) -> Rational {
    Rational::frac(x, 2)
}

/// First-type point `j`: `(d + (r−1)/2, d − k + j + (r−1)/2) / D_j`.
pub fn first_type_point(j: usize, p: &SystemParams) -> OperatingPoint {
    assert!((1..=p.k).contains(&j), "first_type_point: j = {j} out of 1..={}", p.k);
    let (d, k, r, j) = (p.d as i64, p.k as i64, p.r as i64, j as i64);
    let rm = half(r - 1);
    let dj = Rational::from(k) * (Rational::from(d - k + j) + &rm) - half(j * (j - 1));
    let gamma = (Rational::from(d) + &rm) / &dj;
    let alpha = (Rational::from(d - k + j) + &rm) / &dj;
    let kind = if j == k { PointKind::Mbcr } else { PointKind::FirstType(j as usize) };
    OperatingPoint::new(gamma, alpha, kind)
}

/// `D'_ℓ = k(d + r(ℓ+1) − k) − r²ℓ(ℓ+1)/2`.
pub fn second_type_denominator(l: usize, p: &SystemParams) -> Rational {
    let (d, k, r, l) = (p.d as i64, p.k as i64, p.r as i64, l as i64);
    Rational::from(k * (d + r * (l + 1) - k)) - half(r * r * l * (l + 1))
}

/// Second-type point `ℓ`: `(d + r − 1, d − k + r(ℓ+1)) / D'_ℓ`.
pub fn second_type_point(l: usize, p: &SystemParams) -> OperatingPoint {
    assert!(l <= p.k / p.r, "second_type_point: l = {l} exceeds k/r");
    let dd = second_type_denominator(l, p);
    let (d, k, r) = (p.d as i64, p.k as i64, p.r as i64);
    let gamma = Rational::from(d + r - 1) / &dd;
    let alpha = Rational::from(d - k + r * (l as i64 + 1)) / &dd;
    let kind = if l == 0 { PointKind::Mscr } else { PointKind::SecondType(l) };
    OperatingPoint::new(gamma, alpha, kind)
}

pub fn mscr_point(p: &SystemParams) -> OperatingPoint {
    second_type_point(0, p)
}

pub fn mbcr_point(p: &SystemParams) -> OperatingPoint {
    first_type_point(p.k, p)
}

/// Normalized repair bandwidth of single-node (MSR) repair with `d` helpers.
pub fn msr_gamma(d: usize, k: usize) -> Rational {
    Rational::from(d) / Rational::from(k * (d + 1 - k))
}

/// `1/(n·α̃)`.
pub fn storage_efficiency(point: &OperatingPoint, n: usize) -> Rational {
    assert!(point.alpha_norm.is_positive(), "storage_efficiency: alpha must be positive");
    (Rational::from(n) * &point.alpha_norm)
        .recip()
        .expect("positive alpha")
}

/// Whether Algorithm 1 takes the first-type branch at index `j`.
pub fn takes_first_type(j: usize, p: &SystemParams) -> bool {
    if p.r == 1 {
        return true;
    }
    let bound = mu(j, p).scale(&Rational::from(p.r - 1));
    ExtendedRational::Finite(Rational::from(p.d)) <= bound
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RayDirection {
    /// Increasing `γ̃` at fixed `α̃`.
    Gamma,
    /// Increasing `α̃` at fixed `γ̃`.
    Alpha,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ray {
    pub origin: OperatingPoint,
    pub direction: RayDirection,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub params: SystemParams,
    pub vertices: Vec<OperatingPoint>,
    pub rays: Vec<Ray>,
}

impl TradeoffCurve {
    pub fn horizontal_ray_origin(&self) -> &OperatingPoint {
        &self.rays[0].origin
    }

    pub fn vertical_ray_origin(&self) -> &OperatingPoint {
        &self.rays[1].origin
    }

    /// Smallest achievable `γ̃` at storage `α̃`, read off the curve; `None` below `1/k`.
    pub fn gamma_at(&self, alpha: &Rational) -> Option<Rational> {
        let first = self.vertices.first()?;
        if alpha < &first.alpha_norm {
            return None;
        }
        for w in self.vertices.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if alpha <= &b.alpha_norm {
                let t = (alpha - &a.alpha_norm) / (&b.alpha_norm - &a.alpha_norm);
                return Some(&a.gamma_norm + &(t * (&b.gamma_norm - &a.gamma_norm)));
            }
        }
        Some(self.vertices.last()?.gamma_norm.clone())
    }

    /// Slopes `Δγ̃/Δα̃` of consecutive segments.
    pub fn slopes(&self) -> Vec<Rational> {
        self.vertices
            .windows(2)
            .map(|w| (&w[1].gamma_norm - &w[0].gamma_norm) / (&w[1].alpha_norm - &w[0].alpha_norm))
            .collect()
    }

    /// Strictly increasing `α̃`, non-increasing `γ̃`, non-decreasing slopes.
    pub fn is_convex_monotone(&self) -> bool {
        let ordered = self.vertices.windows(2).all(|w| {
            w[0].alpha_norm < w[1].alpha_norm && w[0].gamma_norm >= w[1].gamma_norm
        });
        let slopes = self.slopes();
        ordered && slopes.windows(2).all(|s| s[0] <= s[1])
    }

    /// `gamma,alpha,kind` rows; `decimal` switches to 6-significant-digit decimals.
    pub fn to_csv(&self, decimal: bool) -> String {
        let mut out = String::from("gamma,alpha,kind\n");
        for v in &self.vertices {
            let (g, a) = if decimal {
                (v.gamma_norm.to_decimal_string(6), v.alpha_norm.to_decimal_string(6))
            } else {
                (v.gamma_norm.to_string(), v.alpha_norm.to_string())
            };
            let _ = writeln!(out, "{g},{a},{}", v.kind);
        }
        out
    }
}

/// Whether `b` lies on the line through `a` and `c`.
pub(crate) fn collinear(a: &OperatingPoint, b: &OperatingPoint, c: &OperatingPoint) -> bool {
    let lhs = &(&b.gamma_norm - &a.gamma_norm) * &(&c.alpha_norm - &a.alpha_norm);
    lhs == &(&c.gamma_norm - &a.gamma_norm) * &(&b.alpha_norm - &a.alpha_norm)
}

/// Algorithm 1: walk `j = 2..=k`, choosing the first- or second-type point.
/// A chosen point that falls on a straight stretch of the curve (e.g.
/// d = k = 3, r = 4) is not a vertex and is dropped.
pub fn build_curve(p: &SystemParams) -> TradeoffCurve {
    let mut vertices = vec![mscr_point(p)];
    for j in 2..=p.k {
        let pt = if takes_first_type(j, p) {
            first_type_point(j, p)
        } else {
            second_type_point(j / p.r, p)
        };
        if vertices.last().is_some_and(|last| last.same_coords(&pt)) {
            continue;
        }
        while vertices.len() >= 2 && collinear(&vertices[vertices.len() - 2], &vertices[vertices.len() - 1], &pt) {
            vertices.pop();
        }
        vertices.push(pt);
    }
    let mbcr = vertices.last().expect("non-empty").clone();
    debug_assert_eq!(mbcr.kind, PointKind::Mbcr);
    let rays = vec![
        Ray { origin: vertices[0].clone(), direction: RayDirection::Gamma },
        Ray { origin: mbcr, direction: RayDirection::Alpha },
    ];
    TradeoffCurve { params: *p, vertices, rays }
}

/// Orders points by `α̃`, then `γ̃`.
pub fn cmp_points(a: &OperatingPoint, b: &OperatingPoint) -> Ordering {
    a.alpha_norm
        .cmp(&b.alpha_norm)
        .then_with(|| a.gamma_norm.cmp(&b.gamma_norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(d: usize, k: usize, r: usize) -> SystemParams {
        SystemParams::minimal(d, k, r).unwrap()
    }

    fn pt(g: (i64, i64), a: (i64, i64)) -> (Rational, Rational) {
        (Rational::frac(g.0, g.1), Rational::frac(a.0, a.1))
    }

    fn coords(p: &OperatingPoint) -> (Rational, Rational) {
        (p.gamma_norm.clone(), p.alpha_norm.clone())
    }

    /// Maximize ∑xᵢ² over compositions of j with parts in 0..=m.
    fn psi_brute(j: u64, m: u64) -> u64 {
        fn go(rem: u64, m: u64, cap: u64) -> u64 {
            if rem == 0 {
                return 0;
            }
            (1..=m.min(rem).min(cap))
                .map(|x| x * x + go(rem - x, m, x))
                .max()
                .unwrap()
        }
        go(j, m, m)
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(1, 2), 1);
        assert_eq!(psi(2, 2), 4);
        assert_eq!(psi(5, 3), 13);
        assert_eq!(psi_brute(5, 3), 13);
        assert_eq!(psi(0, 7), 0);
    }

    #[test]
    fn psi_matches_brute_force() {
        for m in 1..=6 {
            for j in 0..=18 {
                assert_eq!(psi(j, m), psi_brute(j, m), "j={j} m={m}");
            }
        }
    }

    #[test]
    fn psi_bounds() {
        for j in 2..=30u64 {
            for m in 1..=10u64 {
                let v = psi(j, m);
                assert!(v <= j * m);
                assert_eq!(v == j * m, j % m == 0, "j={j} m={m}");
                if m >= 2 {
                    assert!(j < v, "j={j} m={m}");
                } else {
                    // m = 1 forces every part to be 1.
                    assert_eq!(v, j);
                }
            }
        }
    }

    #[test]
    fn mu_examples() {
        let p = params(5, 4, 3);
        assert!(mu(3, &p).is_infinite());
        assert_eq!(mu(2, &p), Rational::from(3).into());
        assert_eq!(mu(0, &p), Rational::zero().into());
        let p1 = params(5, 4, 1);
        for j in 1..=4 {
            assert!(mu(j, &p1).is_infinite());
        }
        assert_eq!(mu(4, &params(19, 18, 3)), Rational::frac(17, 2).into());
    }

    #[test]
    fn mu_is_convex_within_blocks() {
        for r in 3..=8usize {
            for k in r..=10 {
                for d in k..=2 * k {
                    let p = params(d, k, r);
                    for l in 0..=k / r {
                        let js: Vec<usize> =
                            (l * r + 1..(l + 1) * r).filter(|&j| j <= k).collect();
                        for w in js.windows(3) {
                            let v: Vec<Rational> =
                                w.iter().map(|&j| mu(j, &p).finite().unwrap().clone()).collect();
                            let second = &v[2] - &(&v[1] * 2) + &v[0];
                            assert!(!second.is_negative(), "{p} l={l} js={w:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn mu_is_not_concave_within_blocks() {
        // Smallest counterexample to concavity inside a block: 1/3, 1, 3.
        let p = params(4, 4, 4);
        let v: Vec<Rational> = (1..=3).map(|j| mu(j, &p).finite().unwrap().clone()).collect();
        assert_eq!(v, vec![Rational::frac(1, 3), Rational::one(), Rational::from(3)]);
        assert!((&v[2] - &(&v[1] * 2) + &v[0]).is_positive());
    }

    #[test]
    fn point_examples() {
        let p = params(5, 4, 3);
        assert_eq!(coords(&first_type_point(2, &p)), pt((6, 15), (4, 15)));
        assert_eq!(coords(&first_type_point(3, &p)), pt((6, 17), (5, 17)));
        assert_eq!(coords(&first_type_point(4, &p)), pt((1, 3), (1, 3)));
        assert_eq!(coords(&second_type_point(0, &p)), pt((7, 16), (1, 4)));
        let big = params(19, 18, 3);
        assert_eq!(second_type_point(1, &big).alpha_norm, Rational::frac(7, 117));
    }

    #[test]
    fn first_type_k_is_mbcr() {
        for (d, k, r) in [(5, 4, 3), (7, 3, 2), (10, 6, 4), (3, 2, 1)] {
            let p = params(d, k, r);
            let m = first_type_point(k, &p);
            let v = Rational::from(2 * d + r - 1) / Rational::from(k * (2 * d + r - k));
            assert_eq!(coords(&m), (v.clone(), v));
            assert_eq!(m.kind, PointKind::Mbcr);
        }
    }

    #[test]
    fn second_type_zero_is_one_over_k() {
        for (d, k, r) in [(5, 4, 3), (7, 3, 2), (10, 6, 4), (3, 2, 1)] {
            let p = params(d, k, r);
            let m = second_type_point(0, &p);
            assert_eq!(m.alpha_norm, Rational::frac(1, k as i64));
            assert_eq!(
                m.gamma_norm,
                Rational::from(d + r - 1) / Rational::from(k * (d + r - k))
            );
        }
    }

    #[test]
    fn curve_543() {
        let c = build_curve(&params(5, 4, 3));
        let got: Vec<_> = c.vertices.iter().map(coords).collect();
        assert_eq!(
            got,
            vec![pt((7, 16), (1, 4)), pt((6, 15), (4, 15)), pt((6, 17), (5, 17)), pt((1, 3), (1, 3))]
        );
        let kinds: Vec<_> = c.vertices.iter().map(|v| v.kind).collect();
        assert_eq!(
            kinds,
            vec![PointKind::Mscr, PointKind::FirstType(2), PointKind::FirstType(3), PointKind::Mbcr]
        );
        assert_eq!(c.horizontal_ray_origin().kind, PointKind::Mscr);
        assert_eq!(c.vertical_ray_origin().kind, PointKind::Mbcr);
    }

    /// `2/(2k(d−k+j) − j(j−1)) · (d, d−k+j)` for single-node repair.
    fn r1_point(d: i64, k: i64, j: i64) -> (Rational, Rational) {
        let s = Rational::frac(2, 2 * k * (d - k + j) - j * (j - 1));
        (&s * d, &s * (d - k + j))
    }

    #[test]
    fn curve_r1_matches_single_repair_formula() {
        for (d, k) in [(5usize, 4usize), (6, 3), (8, 5), (4, 4)] {
            let c = build_curve(&params(d, k, 1));
            let got: Vec<_> = c.vertices.iter().map(coords).collect();
            let mut want = vec![(msr_gamma(d, k), Rational::frac(1, k as i64))];
            want.extend((2..=k as i64).map(|j| r1_point(d as i64, k as i64, j)));
            assert_eq!(got, want, "d={d} k={k}");
        }
        let c = build_curve(&params(5, 4, 1));
        assert_eq!(coords(&c.vertices[0]), pt((5, 8), (1, 4)));
    }

    #[test]
    fn curve_19_18_3_takes_second_type_at_4() {
        let p = params(19, 18, 3);
        assert!(!takes_first_type(4, &p));
        let c = build_curve(&p);
        let q1 = second_type_point(1, &p);
        assert!(c.vertices.iter().any(|v| v.kind == PointKind::SecondType(1) && v.same_coords(&q1)));
    }

    #[test]
    fn efficiency() {
        for (d, k, r) in [(5, 4, 3), (6, 2, 2), (9, 9, 1)] {
            let p = params(d, k, r);
            for n in [d + r, d + r + 3] {
                assert_eq!(
                    storage_efficiency(&mscr_point(&p), n),
                    Rational::frac(k as i64, n as i64)
                );
                assert_eq!(
                    storage_efficiency(&mbcr_point(&p), n),
                    Rational::from(k * (2 * d + r - k)) / Rational::from(n * (2 * d + r - 1))
                );
            }
        }
    }

    #[test]
    fn mbcr_efficiency_at_most_half_at_minimal_n() {
        // (d+r)(2d+r−1) − 2k(2d+r−k) = 2(d−k)² + (r−k)² − k² + 3dr − d − r,
        // which is zero exactly when r = 1 and d = k.
        let half = Rational::frac(1, 2);
        for k in 2..=10 {
            for d in k..=k + 6 {
                for r in 1..=8 {
                    let eff = storage_efficiency(&mbcr_point(&params(d, k, r)), d + r);
                    assert!(eff <= half);
                    assert_eq!(eff == half, r == 1 && d == k, "d={d} k={k} r={r}");
                }
            }
        }
    }

    #[test]
    fn csv_and_json_shapes() {
        let c = build_curve(&params(5, 4, 3));
        let csv = c.to_csv(false);
        assert_eq!(csv.lines().count(), 5);
        assert_eq!(csv.lines().nth(2), Some("2/5,4/15,first:2"));
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["vertices"].as_array().unwrap().len(), 4);
        assert_eq!(v["vertices"][0]["gamma"]["num"], "7");
        let back: TradeoffCurve = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn gamma_at_interpolates() {
        let c = build_curve(&params(5, 4, 3));
        assert_eq!(c.gamma_at(&Rational::frac(1, 4)), Some(Rational::frac(7, 16)));
        assert_eq!(c.gamma_at(&Rational::frac(1, 5)), None);
        assert_eq!(c.gamma_at(&Rational::one()), Some(Rational::frac(1, 3)));
    }

    proptest! {
        #[test]
        fn curve_convex_monotone(k in 2usize..=10, dd in 0usize..=10, r in 1usize..=8) {
            let d = k + dd.min(k);
            let c = build_curve(&params(d, k, r));
            prop_assert!(c.is_convex_monotone(), "{:?}", c.vertices);
            prop_assert_eq!(c.vertices[0].kind, PointKind::Mscr);
            prop_assert_eq!(c.vertices.last().unwrap().kind, PointKind::Mbcr);
            for v in &c.vertices {
                prop_assert!(v.alpha_norm.is_positive() && v.alpha_norm <= Rational::one());
                prop_assert!(v.gamma_norm.is_positive() && v.gamma_norm <= Rational::one());
            }
        }
    }
}

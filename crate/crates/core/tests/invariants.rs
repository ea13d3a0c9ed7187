//! Cross-module properties: LP corners against flow graphs, and the
//! simulator against the closed-form operating points.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use coopregen::codes::Scheme;
use coopregen::cutbound::{corner_betas, corner_points};
use coopregen::flowgraph::{min_cut_over_types, profile, verify_bound, ProfileKind};
use coopregen::storagesim::{run, AuditPolicy, FailureModel, SimConfig};
use coopregen::tradeoff::{mbcr_point, mscr_point};
use coopregen::{Rational, RepairBudget, SystemParams};

/// Smallest integer budget proportional to `(1, α̃, β̃₁, β̃₂)`.
fn integer_budget(alpha: &Rational, b1: &Rational, b2: &Rational) -> RepairBudget {
    let l = [alpha, b1, b2].iter().fold(BigInt::from(1), |acc, x| acc.lcm(x.denom()));
    let scale = |x: &Rational| (x * &Rational::from_int(l.clone())).to_i64().unwrap() as u64;
    RepairBudget::new(l.to_u64().unwrap(), scale(alpha), scale(b1), scale(b2)).unwrap()
}

#[test]
fn corner_budgets_are_exactly_certified_by_flow() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for k in 2..=4usize {
        for d in k..=k + 2 {
            for r in 1..=3usize {
                let p = SystemParams::minimal(d, k, r).unwrap();
                for pt in corner_points(&p) {
                    let (b1, b2) = corner_betas(&pt, &p);
                    let budget = integer_budget(&pt.alpha_norm, &b1, &b2);
                    assert_eq!(min_cut_over_types(&p, &budget), budget.b, "{p} {pt:?}");
                    let rep = verify_bound(&p, &budget, 3, 3, &mut rng).unwrap();
                    assert!(rep.consistent(), "{p} {pt:?} {rep:?}");
                    assert_eq!(rep.adversarial, budget.b);
                    // a budget one unit smaller on every link falls short of B
                    if budget.beta1 > 0 {
                        let short = RepairBudget { beta1: budget.beta1 - 1, ..budget };
                        assert!(min_cut_over_types(&p, &short) < budget.b, "{p} {pt:?}");
                    }
                }
            }
        }
    }
}

#[test]
fn profile_budgets_match_the_corner_relations() {
    for k in 2..=6usize {
        for d in k..=k + 2 {
            for r in 1..=3usize {
                let p = SystemParams::minimal(d, k, r).unwrap();
                for z in 0..=k - 2 {
                    let b = profile(ProfileKind::FirstType(z), &p).unwrap().budget;
                    assert_eq!(b.beta1, 2 * b.beta2);
                    assert_eq!(min_cut_over_types(&p, &b), b.b, "{p} z={z}");
                }
                for l in 0..=k / r {
                    let b = profile(ProfileKind::SecondType(l), &p).unwrap().budget;
                    assert_eq!(b.beta1, b.beta2);
                    assert_eq!(min_cut_over_types(&p, &b), b.b, "{p} l={l}");
                }
            }
        }
    }
}

fn sim(scheme: Scheme, p: SystemParams, q: u64, seed: u64, profile: Option<ProfileKind>) -> SimConfig {
    SimConfig {
        params: p,
        scheme,
        q,
        poly: 0,
        stages: 4,
        failures: FailureModel::Uniform,
        audit: AuditPolicy::Auto,
        seed,
        profile,
        chunks: 2,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_schemes_restore_and_meter_closed_form(
        seed in any::<u64>(),
        k in 2usize..5,
        r in 1usize..4,
        extra in 0usize..3,
        mbcr in any::<bool>(),
    ) {
        let d = k;
        let (scheme, n) = if mbcr { (Scheme::Mbcr, d + r) } else { (Scheme::Mscr, d + r + extra) };
        let p = SystemParams::new(n, d, k, r).unwrap();
        let rep = run(sim(scheme, p, 256, seed, None)).unwrap();
        prop_assert!(rep.all_passed);
        let gamma = if mbcr { 2 * d + r - 1 } else { d + r - 1 } as u64;
        for s in &rep.stages {
            prop_assert_eq!(s.exact_restore, Some(true));
            prop_assert!(s.survivors_untouched);
            prop_assert_eq!(s.bandwidth.total(), gamma * r as u64);
            prop_assert_eq!(s.symbols_moved, gamma * r as u64 * 2);
        }
        let point = if mbcr { mbcr_point(&p) } else { mscr_point(&p) };
        prop_assert_eq!(&rep.normalized.gamma, &point.gamma_norm);
        prop_assert_eq!(&rep.normalized.alpha, &point.alpha_norm);
    }

    #[test]
    fn rlnc_meter_and_determinism(seed in any::<u64>(), first in any::<bool>(), idx in 0usize..2) {
        let p = SystemParams::new(5, 3, 2, 2).unwrap();
        let kind = if first { ProfileKind::FirstType(0) } else { ProfileKind::SecondType(idx) };
        let budget = profile(kind, &p).unwrap().budget;
        let cfg = sim(Scheme::Rlnc, p, 1 << 16, seed, Some(kind));
        let a = run(cfg.clone()).unwrap();
        let b = run(cfg).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        prop_assert!(a.all_passed);
        for s in &a.stages {
            prop_assert!(s.survivors_untouched);
            prop_assert_eq!(s.bandwidth.total(), budget.gamma(&p) * p.r as u64);
        }
        prop_assert_eq!(a.alpha as u64, budget.alpha);
    }
}

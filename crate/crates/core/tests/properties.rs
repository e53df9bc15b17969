//! Properties of the numeric kernel, the constraint families and envelope
//! construction, checked against independent oracles.

use std::sync::Arc;

use clairaut::envelope::{
    brute_force_upper_envelope, envelope_branch, envelope_function_constraint, explicit_envelope, STATIONARITY_TOL,
};
use clairaut::exprlang::parse;
use clairaut::families::{enumerate_branches, fn2, resolve, FunctionOfA, ImplicitRelation, Param, PlaneFamily};
use clairaut::numerics::{
    diff_central, find_root, fn3_from_expr, gradient3, integrate, linspace, Fn2, Interval, Rect, ToleranceConfig,
};
use clairaut::verify::{homogeneity_check, ExplicitGraph, ImplicitLevelSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn horner(c: &[f64], a: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, k| acc * a + k)
}

fn horner_prime(c: &[f64], a: f64) -> f64 {
    c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (i, k)| acc * a + i as f64 * k)
}

fn circle() -> ImplicitRelation {
    ImplicitRelation {
        rel: fn2(|a, b| Ok((a - 1.0).powi(2) + (b - 1.0).powi(2) - 1.0)),
        a_domain: Interval::new(0.0, 2.0),
        b_domain: Interval::new(0.0, 2.0),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn central_difference_on_quintics(c in prop::collection::vec(-3.0f64..3.0, 6), a in -10.0f64..10.0) {
        let d = diff_central(|t| Ok(horner(&c, t)), a, &cfg()).unwrap();
        let exact = horner_prime(&c, a);
        // relative to the size of the terms, which is what rounding scales with
        let scale = c.iter().enumerate().map(|(i, k)| (i as f64 * k * a.abs().powi(i as i32 - 1).max(1.0)).abs()).sum::<f64>();
        prop_assert!((d - exact).abs() <= 1e-5 * (1.0 + exact.abs().max(scale)), "{d} vs {exact}");
    }

    #[test]
    fn simpson_is_exact_on_cubics(c in prop::collection::vec(-5.0f64..5.0, 4), lo in -3.0f64..3.0, w in 0.0f64..4.0) {
        let hi = lo + w;
        let v = integrate(|t| Ok(horner(&c, t)), lo, hi, &cfg()).unwrap();
        let anti = |t: f64| c.iter().enumerate().map(|(i, k)| k * t.powi(i as i32 + 1) / (i as f64 + 1.0)).sum::<f64>();
        prop_assert!((v - (anti(hi) - anti(lo))).abs() <= 1e-12 * (1.0 + anti(hi).abs() + anti(lo).abs()));
    }

    #[test]
    fn roots_stay_in_bracket(r in -5.0f64..5.0, lo_off in 0.0f64..3.0, hi_off in 0.0f64..3.0, k in 1i32..4) {
        let (lo, hi) = (r - lo_off, r + hi_off);
        if let Ok(x) = find_root(|t| Ok((t - r).powi(2 * k - 1)), lo, hi, &cfg()) {
            prop_assert!(lo <= x && x <= hi);
            // stops on a small residual or a collapsed bracket
            let fx = (x - r).powi(2 * k - 1).abs();
            prop_assert!(fx <= cfg().root_tol || (x - r).abs() <= 1e-9 * (1.0 + r.abs()), "{x} vs {r}");
        }
    }

    #[test]
    fn function_of_a_keeps_first_coordinate(a in -10.0f64..10.0) {
        let c = clairaut::families::ConstraintCurve::FunctionOfA(
            FunctionOfA::new(Arc::new(|a: f64| Ok(a.sin() - a * a)), Interval::new(-10.0, 10.0)));
        let (ra, rb) = resolve(&c, Param::Scalar(a), &cfg()).unwrap();
        prop_assert_eq!(ra.to_bits(), a.to_bits());
        prop_assert_eq!(rb, a.sin() - a * a);
    }

    #[test]
    fn circle_has_two_branches_for_any_sampling(n in 8usize..400) {
        let branches = enumerate_branches(&circle(), n).unwrap();
        prop_assert_eq!(branches.len(), 2);
    }

    #[test]
    fn envelope_points_satisfy_both_conditions(c in prop::collection::vec(-2.0f64..2.0, 3), a in -3.0f64..3.0, y in -4.0f64..4.0) {
        // b = c0 + c1·a + c2·a², checked by recomputing f and ∂f/∂a from scratch
        let cc = c.clone();
        let con = FunctionOfA::new(Arc::new(move |a| Ok(horner(&cc, a))), Interval::new(-3.0, 3.0));
        let s = envelope_function_constraint(&PlaneFamily::origin(), &con, &[a], &[y], &cfg()).unwrap();
        for p in s.accepted() {
            let [x, y, z] = p.p;
            let f = |t: f64| t * x + horner(&c, t) * y - z;
            let fa = x + horner_prime(&c, p.param) * y;
            prop_assert!(f(p.param).abs() <= cfg().residual_tol);
            prop_assert!(fa.abs() <= STATIONARITY_TOL);
            for s in [0.5, 2.0, -1.0] {
                let q = [s * x, s * y, s * z];
                prop_assert!((p.param * q[0] + horner(&c, p.param) * q[1] - q[2]).abs() <= cfg().residual_tol);
                prop_assert!((q[0] + horner_prime(&c, p.param) * q[1]).abs() <= STATIONARITY_TOL);
            }
        }
    }
}

#[test]
fn branch_residuals_over_1000_samples() {
    let rels: Vec<(ImplicitRelation, usize)> = vec![
        (circle(), 2),
        (
            ImplicitRelation {
                rel: fn2(|a, b| Ok(a * b - 1.0)),
                a_domain: Interval::new(0.1, 10.0),
                b_domain: Interval::new(0.0, 11.0),
            },
            1,
        ),
        (
            ImplicitRelation {
                rel: fn2(|a, b| Ok(b - a * a)),
                a_domain: Interval::new(-2.0, 2.0),
                b_domain: Interval::new(-1.0, 5.0),
            },
            1,
        ),
    ];
    for (rel, count) in rels {
        let branches = enumerate_branches(&rel, 64).unwrap();
        assert_eq!(branches.len(), count);
        for br in &branches {
            for a in br.a_interval.linspace(1000) {
                let r = (rel.rel)(a, br.psi(a).unwrap()).unwrap();
                assert!(r.abs() <= 1e-8, "|rel| = {r} at a = {a}");
            }
        }
    }
}

#[test]
fn gradient3_matches_dual_numbers() {
    let srcs = ["z^2 - 2*x*z - 2*y*z + 2*x*y", "x^2 + y^2 + z^2 - 2*x*z - 2*y*z", "z*y^2 - x^3", "sin(x*y) + exp(z/3) - x"];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for src in srcs {
        let e = parse(src).unwrap();
        let exact = ImplicitLevelSet::from_expr(&e).unwrap();
        let f = fn3_from_expr(&e, ["x", "y", "z"]).unwrap();
        for _ in 0..100 {
            let p = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let g = gradient3(|x, y, z| f(x, y, z), p, &cfg()).unwrap();
            let d = (exact.grad.as_ref().unwrap())(p[0], p[1], p[2]).unwrap();
            for i in 0..3 {
                assert!((g[i] - d[i]).abs() <= 1e-5 * (1.0 + d[i].abs()), "{src} at {p:?}: {g:?} vs {d:?}");
            }
        }
    }
}

#[test]
fn hyperbola_branch_matches_brute_force() {
    let rel = ImplicitRelation {
        rel: fn2(|a, b| Ok(a * b - 1.0)),
        a_domain: Interval::new(0.1, 10.0),
        b_domain: Interval::new(0.0, 11.0),
    };
    let br = &enumerate_branches(&rel, 64).unwrap()[0];
    let xs = linspace(0.1, 10.0, 64);
    let grid: Vec<[f64; 2]> = xs.iter().map(|&x| [x, 1.0]).collect();
    let s = envelope_branch(&PlaneFamily::origin(), br, &grid, &cfg()).unwrap();
    assert_eq!(s.accepted().count(), 64);
    let g: Fn2 = Arc::new(|x, a| Ok(a - a * a * x));
    let a_grid = linspace(0.0, 10.0, 200_001);
    for p in s.accepted() {
        // on z = 1 the point is (x/z, y/z) = (X, Y) with Y the envelope of Y = a − a²X
        let (x, y) = (p.p[0] / p.p[2], p.p[1] / p.p[2]);
        assert!((y - 1.0 / (4.0 * x)).abs() <= 1e-8);
        assert!((brute_force_upper_envelope(&g, x, &a_grid).unwrap() - y).abs() <= 1e-4);
    }
}

#[test]
fn invertible_constraints_give_homogeneous_envelopes() {
    for src in ["1/a", "-a^2/2"] {
        let dom = if src == "1/a" { Interval::new(0.05, 20.0) } else { Interval::new(-20.0, 20.0) };
        let c = FunctionOfA::from_exprs(&parse(src).unwrap(), None, dom, true).unwrap();
        let h = ExplicitGraph::new(explicit_envelope(&c, &cfg()), Rect::new(Interval::new(0.5, 2.0), Interval::new(0.5, 2.0)));
        let r = homogeneity_check(&h, 1.0, 8, &[0.5, 2.0, 3.0]).unwrap();
        assert!(r.max_rel_error <= 1e-9, "{src}: {r:?}");
    }
}

//! Classification of envelope candidates: envelope points versus loci of
//! singularities, cusps of parameter curves, invertibility of `φ′` and
//! multivaluedness of a surface over the `(x, y)` plane.

use std::f64::consts::PI;

use serde::Serialize;

use crate::numerics::{diff_central, linspace, CurveFn, Fn1, Fn3, Interval, ToleranceConfig};
use crate::{Error, Point2, Result};

/// Gradient norm at or below which a candidate is a singular point of its curve.
pub const GRAD_TOL: f64 = 1e-6;
/// Relative gradient (against the neighbourhood) below which no label is given.
pub const INDETERMINATE_RATIO: f64 = 1e-4;
/// Relative speed below which a parameter curve has a cusp.
pub const CUSP_RATIO: f64 = 1e-6;
/// Default relative radius gap for a multivaluedness witness.
pub const DEFAULT_RADIUS_SEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Envelope,
    SingularLocus,
    Cusp,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifiedPoint {
    pub p: Vec<f64>,
    pub param: f64,
    pub label: Label,
    pub grad_family: Vec<f64>,
    pub speed: Option<f64>,
}

fn grad_xy(f: &Fn3, x: f64, y: f64, a: f64, cfg: &ToleranceConfig) -> Result<[f64; 2]> {
    Ok([diff_central(|t| f(t, y, a), x, cfg)?, diff_central(|t| f(x, t, a), y, cfg)?])
}

/// Label candidates of the curve family `f(x, y, a) = 0` that satisfy the
/// envelope condition.
///
/// A candidate whose spatial gradient `(f_x, f_y)` vanishes (norm at most
/// [`GRAD_TOL`]) lies on a locus of singularities; otherwise it is an
/// envelope point, unless the gradient is tiny relative to its
/// neighbourhood, in which case it is left indeterminate.
pub fn classify_locus(f: &Fn3, candidates: &[(Point2, f64)], cfg: &ToleranceConfig) -> Result<Vec<ClassifiedPoint>> {
    let mut out = Vec::with_capacity(candidates.len());
    for &([x, y], a) in candidates {
        let value = f(x, y, a)?;
        let fa = diff_central(|t| f(x, y, t), a, cfg)?;
        if !(value.abs() <= cfg.residual_tol && fa.abs() <= GRAD_TOL) {
            return Err(Error::CandidateNotOnFamily { x, y, param: a, f: value, fa });
        }
        let g = grad_xy(f, x, y, a, cfg)?;
        let norm = g[0].hypot(g[1]);
        let label = if norm <= GRAD_TOL {
            Label::SingularLocus
        } else {
            let delta = 1e-2 * (1.0 + x.hypot(y));
            let mut window: f64 = 0.0;
            for k in 0..8 {
                let t = k as f64 * PI / 4.0;
                let n = grad_xy(f, x + delta * t.cos(), y + delta * t.sin(), a, cfg)?;
                window = window.max(n[0].hypot(n[1]));
            }
            if norm <= INDETERMINATE_RATIO * window {
                Label::Indeterminate
            } else {
                Label::Envelope
            }
        };
        out.push(ClassifiedPoint { p: vec![x, y], param: a, label, grad_family: g.to_vec(), speed: None });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CuspReport {
    pub cusp: bool,
    /// `‖g′(t0)‖`.
    pub speed: f64,
    /// Largest speed over the surrounding window.
    pub window_max: f64,
}

const CUSP_WINDOW_POINTS: usize = 21;

/// Whether `g` has a cusp at `t0`: its speed there is at most
/// [`CUSP_RATIO`] times the largest speed over `t0 ± 0.1·(1 + |t0|)`, and
/// that largest speed is positive.
pub fn detect_cusp(g: &CurveFn, t0: f64, cfg: &ToleranceConfig) -> Result<CuspReport> {
    let speed = |t: f64| -> Result<f64> {
        let u = diff_central(|s| Ok(g(s)?[0]), t, cfg)?;
        let v = diff_central(|s| Ok(g(s)?[1]), t, cfg)?;
        Ok(u.hypot(v))
    };
    let at = speed(t0)?;
    let half = 0.1 * (1.0 + t0.abs());
    let mut window_max: f64 = 0.0;
    for t in linspace(t0 - half, t0 + half, CUSP_WINDOW_POINTS) {
        window_max = window_max.max(speed(t)?);
    }
    let cusp = window_max > 0.0 && at <= CUSP_RATIO * window_max;
    Ok(CuspReport { cusp, speed: at, window_max })
}

/// A [`ClassifiedPoint`] for a parameter curve at `t0`: `Cusp` if
/// [`detect_cusp`] fires, else `Envelope`.
pub fn classify_curve_point(g: &CurveFn, t0: f64, cfg: &ToleranceConfig) -> Result<ClassifiedPoint> {
    let r = detect_cusp(g, t0, cfg)?;
    let p = g(t0)?;
    Ok(ClassifiedPoint {
        p: p.to_vec(),
        param: t0,
        label: if r.cusp { Label::Cusp } else { Label::Envelope },
        grad_family: Vec::new(),
        speed: Some(r.speed),
    })
}

/// Whether `fp` is strictly monotone on `n_samples` equally spaced points,
/// every step exceeding `1e-12` in the same direction.
pub fn invertibility_check(fp: &Fn1, interval: Interval, n_samples: usize) -> Result<bool> {
    if n_samples < 3 {
        return Err(Error::InvalidConfig(format!("n_samples must be at least 3, got {n_samples}")));
    }
    let values = interval.linspace(n_samples).into_iter().map(|a| fp(a)).collect::<Result<Vec<_>>>()?;
    let steps: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(steps.iter().all(|&d| d > 1e-12) || steps.iter().all(|&d| d < -1e-12))
}

/// Two points on (nearly) one ray from the origin at clearly different
/// distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub p: Point2,
    pub q: Point2,
    pub angle_gap: f64,
    pub radius_ratio: f64,
}

/// Search a `z = 1` cross-section for two points whose polar angles differ
/// by at most `angle_tol` and whose radii differ by a ratio outside
/// `[1 − radius_sep, 1 + radius_sep]`. Points at the origin are ignored.
pub fn detect_multivalued(points2d: &[Point2], angle_tol: f64, radius_sep: f64) -> Option<Witness> {
    let mut polar: Vec<(f64, f64, Point2)> = points2d
        .iter()
        .filter(|p| p[0] != 0.0 || p[1] != 0.0)
        .map(|&p| (p[1].atan2(p[0]), p[0].hypot(p[1]), p))
        .collect();
    polar.sort_by(|u, v| u.0.total_cmp(&v.0).then(u.1.total_cmp(&v.1)));
    let n = polar.len();
    let far = |r0: f64, r1: f64| {
        let ratio = r1 / r0;
        ratio < 1.0 - radius_sep || ratio > 1.0 + radius_sep
    };
    for i in 0..n {
        // forward neighbours, continuing past +π to −π
        for k in 1..n {
            let j = (i + k) % n;
            let mut gap = polar[j].0 - polar[i].0;
            if j <= i {
                gap += 2.0 * PI;
            }
            if gap > angle_tol {
                break;
            }
            if far(polar[i].1, polar[j].1) {
                return Some(Witness {
                    p: polar[i].2,
                    q: polar[j].2,
                    angle_gap: gap,
                    radius_ratio: polar[j].1 / polar[i].1,
                });
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn goursat(c: f64) -> Fn3 {
        Arc::new(move |x, y, a| Ok(c * (y.powi(4) - y * y - (x - a).powi(2))))
    }

    #[test]
    fn goursat_labels() {
        let cands = [([0.3, 0.0], 0.3), ([0.3, 1.0], 0.3), ([-2.0, -1.0], -2.0)];
        for c in [1.0, 0.1, 10.0] {
            let labels: Vec<Label> = classify_locus(&goursat(c), &cands, &cfg()).unwrap().into_iter().map(|p| p.label).collect();
            assert_eq!(labels, vec![Label::SingularLocus, Label::Envelope, Label::Envelope]);
        }
    }

    #[test]
    fn parabola_singular_integral_is_an_envelope() {
        let f: Fn3 = Arc::new(|x, y, c| Ok(y - (x + c).powi(2)));
        let r = classify_locus(&f, &[([1.5, 0.0], -1.5)], &cfg()).unwrap();
        assert_eq!(r[0].label, Label::Envelope);
        assert!((r[0].grad_family[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn candidates_off_the_family_are_rejected() {
        let e = classify_locus(&goursat(1.0), &[([0.3, 0.5], 0.3)], &cfg());
        assert!(matches!(e, Err(Error::CandidateNotOnFamily { .. })));
        // on the curve but not stationary in a
        let e = classify_locus(&goursat(1.0), &[([1.0, 0.0], 1.0 + 1e-3)], &cfg());
        assert!(matches!(e, Err(Error::CandidateNotOnFamily { .. })));
    }

    #[test]
    fn indeterminate_between_thresholds() {
        // gradient 1e-5 at the candidate, about 2 a short distance away
        let f: Fn3 = Arc::new(|x, y, _| Ok(1e-5 * x + 100.0 * y * y));
        let r = classify_locus(&f, &[([0.0, 0.0], 0.0)], &cfg()).unwrap();
        assert_eq!(r[0].label, Label::Indeterminate);
    }

    #[test]
    fn cusp_examples() {
        let g: CurveFn = Arc::new(|t| Ok([t * t, t * t * t]));
        assert!(detect_cusp(&g, 0.0, &cfg()).unwrap().cusp);
        let semicubical: CurveFn = Arc::new(|t| Ok([3.0 * t * t, -2.0 * t * t * t]));
        assert!(detect_cusp(&semicubical, 0.0, &cfg()).unwrap().cusp);
        assert_eq!(classify_curve_point(&semicubical, 0.0, &cfg()).unwrap().label, Label::Cusp);
        let circle: CurveFn = Arc::new(|t: f64| Ok([t.cos(), t.sin()]));
        let r = detect_cusp(&circle, 0.0, &cfg()).unwrap();
        assert!(!r.cusp && (r.speed - 1.0).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let t0: f64 = rng.gen_range(0.1..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            assert!(!detect_cusp(&semicubical, t0, &cfg()).unwrap().cusp, "t0={t0}");
        }
    }

    #[test]
    fn constant_curve_is_not_a_cusp() {
        let g: CurveFn = Arc::new(|_| Ok([1.0, 2.0]));
        assert!(!detect_cusp(&g, 0.0, &cfg()).unwrap().cusp);
    }

    #[test]
    fn invertibility_examples() {
        let fp: Fn1 = Arc::new(|a| Ok(-1.0 / (a * a)));
        assert!(invertibility_check(&fp, Interval::new(0.5, 4.0), 200).unwrap());
        let constant: Fn1 = Arc::new(|_| Ok(1.0));
        assert!(!invertibility_check(&constant, Interval::new(0.0, 1.0), 10).unwrap());
        let bump: Fn1 = Arc::new(|a| Ok(((a - 1.0f64).powi(2) - 1.0).powi(2)));
        assert!(!invertibility_check(&bump, Interval::new(0.0, 2.0), 50).unwrap());
        assert!(invertibility_check(&fp, Interval::new(0.5, 4.0), 2).is_err());
    }

    #[test]
    fn multivalued_examples() {
        // circle of radius 1 about (1, 1): rays through the first quadrant hit it twice
        let circle: Vec<Point2> = linspace(0.0, 2.0 * PI, 4001).into_iter().map(|t| [1.0 + t.cos(), 1.0 + t.sin()]).collect();
        let w = detect_multivalued(&circle, 1e-3, DEFAULT_RADIUS_SEP).unwrap();
        assert!(w.angle_gap <= 1e-3 && (w.radius_ratio - 1.0).abs() > 0.05);
        let line: Vec<Point2> = linspace(-3.0, 4.0, 4001).into_iter().map(|x| [x, 1.0 - x]).collect();
        assert_eq!(detect_multivalued(&line, 1e-3, DEFAULT_RADIUS_SEP), None);
        let hyperbola: Vec<Point2> = linspace(0.25, 1.0, 4001).into_iter().map(|x| [x, 0.25 / x]).collect();
        assert_eq!(detect_multivalued(&hyperbola, 1e-3, DEFAULT_RADIUS_SEP), None);
    }

    #[test]
    fn multivalued_wraps_around_the_negative_axis() {
        let pts = [[-1.0, 1e-6], [-3.0, -1e-6]];
        assert!(detect_multivalued(&pts, 1e-3, 0.05).is_some());
        assert!(detect_multivalued(&[[0.0, 0.0], [1.0, 1.0]], 1e-3, 0.05).is_none());
    }

    proptest! {
        #[test]
        fn straight_lines_have_no_cusp(m in -20.0f64..20.0, t in -50.0f64..50.0) {
            let g: CurveFn = Arc::new(move |s| Ok([s, s * m]));
            prop_assert!(!detect_cusp(&g, t, &cfg()).unwrap().cusp);
        }

        #[test]
        fn labels_are_scale_stable(a in -3.0f64..3.0, c in prop::sample::select(vec![0.1, 10.0])) {
            let cands = [([a, 0.0], a), ([a, 1.0], a), ([a, -1.0], a)];
            let base: Vec<Label> = classify_locus(&goursat(1.0), &cands, &cfg()).unwrap().into_iter().map(|p| p.label).collect();
            let scaled: Vec<Label> = classify_locus(&goursat(c), &cands, &cfg()).unwrap().into_iter().map(|p| p.label).collect();
            prop_assert_eq!(base, scaled);
        }
    }
}

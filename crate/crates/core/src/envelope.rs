//! Envelopes of plane families: point clouds, projective traces and the
//! `z = 1` cross-section.

use serde::Serialize;

use crate::families::{Branch, FunctionOfA, InverseMap, ParametricCurve, PlaneFamily};
use crate::numerics::{diff_central, find_root, linspace, Fn1, Fn2, Fn3, Interval, ToleranceConfig};
use crate::{Error, Point2, Point3, Result};

/// Bound on `|∂f/∂param|` for an accepted point.
pub const STATIONARITY_TOL: f64 = 1e-6;

/// Scales applied along each characteristic ray when none are given.
pub const DEFAULT_S_GRID: [f64; 6] = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];

/// Samples used to bracket the stationary parameter on a branch.
const STATIONARY_SCAN: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopePoint {
    pub p: Point3,
    /// The `a`, `θ` or `x/y` that generated the point.
    pub param: f64,
    pub family_residual: f64,
    pub stationarity_residual: f64,
    pub accepted: bool,
}

impl EnvelopePoint {
    fn new(p: Point3, param: f64, family_residual: f64, stationarity_residual: f64, cfg: &ToleranceConfig) -> Self {
        let accepted = family_residual <= cfg.residual_tol && stationarity_residual <= STATIONARITY_TOL;
        EnvelopePoint { p, param, family_residual, stationarity_residual, accepted }
    }
}

/// A grid point that produced no envelope point, and why.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub at: Vec<f64>,
    pub kind: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub skipped: Vec<Skipped>,
}

impl Diagnostics {
    fn skip(&mut self, at: &[f64], e: &Error) {
        self.skipped.push(Skipped { at: at.to_vec(), kind: e.kind(), message: e.to_string() });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledSurface {
    pub points: Vec<EnvelopePoint>,
    pub source: String,
    pub diagnostics: Diagnostics,
}

impl SampledSurface {
    fn new(source: impl Into<String>) -> Self {
        SampledSurface { points: Vec::new(), source: source.into(), diagnostics: Diagnostics::default() }
    }

    pub fn accepted(&self) -> impl Iterator<Item = &EnvelopePoint> {
        self.points.iter().filter(|p| p.accepted)
    }

    /// Coordinates of the accepted points.
    pub fn cloud(&self) -> Vec<Point3> {
        self.accepted().map(|p| p.p).collect()
    }

    pub fn merge(mut self, other: SampledSurface) -> Self {
        self.points.extend(other.points);
        self.diagnostics.skipped.extend(other.diagnostics.skipped);
        self.source = format!("{} + {}", self.source, other.source);
        self
    }
}

fn require_origin(fam: &PlaneFamily) -> Result<()> {
    if fam.is_origin() {
        Ok(())
    } else {
        Err(Error::InvalidConfig("envelope construction needs the untilted family z = a·x + b·y".into()))
    }
}

fn require_nonempty(name: &str, grid: &[impl Sized]) -> Result<()> {
    if grid.is_empty() {
        Err(Error::InvalidConfig(format!("{name} must not be empty")))
    } else {
        Ok(())
    }
}

/// `(x, y, z) = (−φ′(a)·y, y, (φ(a) − a·φ′(a))·y)` over `a_grid × y_grid`,
/// in `a`-major order.
pub fn envelope_function_constraint(
    fam: &PlaneFamily,
    c: &FunctionOfA,
    a_grid: &[f64],
    y_grid: &[f64],
    cfg: &ToleranceConfig,
) -> Result<SampledSurface> {
    require_origin(fam)?;
    require_nonempty("a grid", a_grid)?;
    require_nonempty("y grid", y_grid)?;
    let mut out = SampledSurface::new("function constraint b = φ(a)");
    for &a in a_grid {
        if !c.domain.contains(a) {
            return Err(Error::OutOfDomain { what: "a", value: a, lo: c.domain.lo, hi: c.domain.hi });
        }
        let phi = c.phi(a)?;
        let dphi = c.derivative(a, cfg)?;
        for &y in y_grid {
            let p = [-dphi * y, y, (phi - a * dphi) * y];
            let (fr, sr) = fam.membership(|t| Ok((t, c.phi(t)?)), p, a, cfg)?;
            out.points.push(EnvelopePoint::new(p, a, fr, sr, cfg));
        }
    }
    Ok(out)
}

/// The `y = 1` trace `(X, Z) = (−φ′(a), φ(a) − a·φ′(a))`.
pub fn projective_curve(c: &FunctionOfA, a_grid: &[f64], cfg: &ToleranceConfig) -> Result<Vec<Point2>> {
    require_nonempty("a grid", a_grid)?;
    a_grid
        .iter()
        .map(|&a| {
            let dphi = c.derivative(a, cfg)?;
            Ok([-dphi, c.phi(a)? - a * dphi])
        })
        .collect()
}

/// Roots of `g` from its values on `scan` (exact zeros and polished sign
/// changes); `None` marks points where `g` is undefined.
fn roots_from_samples(
    scan: &[f64],
    values: &[Option<f64>],
    g: impl Fn(f64) -> Result<f64>,
    cfg: &ToleranceConfig,
) -> Result<Vec<f64>> {
    let mut roots = Vec::new();
    for i in 0..scan.len() {
        if values[i] == Some(0.0) {
            roots.push(scan[i]);
        }
        if i + 1 < scan.len() {
            if let (Some(u), Some(v)) = (values[i], values[i + 1]) {
                if u * v < 0.0 {
                    roots.push(find_root(&g, scan[i], scan[i + 1], cfg)?);
                }
            }
        }
    }
    Ok(roots)
}

fn sample(f: impl Fn(f64) -> Result<f64>, t: f64) -> Result<Option<f64>> {
    match f(t) {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        Ok(_) => Ok(None),
        Err(e) if e.is_domain() || matches!(e, Error::OutOfDomain { .. } | Error::NoRoots) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Stationarity `|x·rel_b − y·rel_a| / ‖∇rel‖` measured along the relation
/// itself; finite at folds where `ψ′` blows up.
fn curve_stationarity(rel: &Fn2, a: f64, b: f64, x: f64, y: f64, cfg: &ToleranceConfig) -> Result<f64> {
    let ra = diff_central(|t| rel(t, b), a, cfg)?;
    let rb = diff_central(|t| rel(a, t), b, cfg)?;
    let norm = ra.hypot(rb);
    if norm == 0.0 {
        return Err(Error::DegenerateDirection { param: a, speed: 0.0 });
    }
    Ok((x * rb - y * ra).abs() / norm)
}

/// For each `(x, y)`, every `a` on the branch with `x + ψ′(a)·y = 0`, and
/// the point `(x, y, a·x + ψ(a)·y)`.
///
/// On `y = 0` the stationary parameter sits at a fold end of the branch
/// (the limit `y → 0⁺`); the origin yields `(0, 0, 0)`. Grid points with no
/// stationary parameter are recorded in the diagnostics.
pub fn envelope_branch(
    fam: &PlaneFamily,
    br: &Branch,
    xy_grid: &[Point2],
    cfg: &ToleranceConfig,
) -> Result<SampledSurface> {
    require_origin(fam)?;
    let iv = br.a_interval;
    let inset = 4.0 * cfg.step_at(iv.lo.abs().max(iv.hi.abs()));
    if iv.width() <= 2.0 * inset {
        return Err(Error::InvalidConfig(format!("branch interval {:?} is too short", iv)));
    }
    let scan = linspace(iv.lo + inset, iv.hi - inset, STATIONARY_SCAN + 1);
    let dpsi = scan.iter().map(|&a| sample(|t| br.psi_prime(t, cfg), a)).collect::<Result<Vec<_>>>()?;
    let first_slope = dpsi.iter().flatten().next().copied();
    let last_slope = dpsi.iter().rev().flatten().next().copied();
    let coupling = |t: f64| Ok((t, br.psi(t)?));

    let mut out = SampledSurface::new("implicit relation branch b = ψ(a)");
    for &[x, y] in xy_grid {
        if x == 0.0 && y == 0.0 {
            let a = iv.mid();
            let (fr, sr) = fam.membership(coupling, [0.0; 3], a, cfg)?;
            out.points.push(EnvelopePoint::new([0.0; 3], a, fr, sr, cfg));
            continue;
        }
        let values: Vec<Option<f64>> = dpsi.iter().map(|d| d.map(|d| x + d * y)).collect();
        let roots = roots_from_samples(&scan, &values, |a| Ok(x + br.psi_prime(a, cfg)? * y), cfg)?;
        let before = out.points.len();
        for a in roots {
            let p = [x, y, a * x + br.psi(a)? * y];
            let (fr, sr) = fam.membership(coupling, p, a, cfg)?;
            out.points.push(EnvelopePoint::new(p, a, fr, sr, cfg));
        }
        if out.points.len() == before && y.abs() <= cfg.residual_tol * (1.0 + x.abs()) {
            for (a, slope) in [(iv.lo, first_slope), (iv.hi, last_slope)] {
                let Some(slope) = slope else { continue };
                if slope.signum() != -x.signum() {
                    continue;
                }
                let b = br.psi(a)?;
                let sr = curve_stationarity(br.relation(), a, b, x, y, cfg)?;
                if sr <= STATIONARITY_TOL {
                    let p = [x, y, a * x + b * y];
                    let fr = fam.f(p, a, b)?.abs();
                    out.points.push(EnvelopePoint::new(p, a, fr, sr, cfg));
                }
            }
        }
        if out.points.len() == before {
            let e = Error::NoBracket { lo: iv.lo, hi: iv.hi, f_lo: f64::NAN, f_hi: f64::NAN };
            out.diagnostics.skip(&[x, y], &e);
        }
    }
    Ok(out)
}

/// `(−b′(θ), a′(θ), a′(θ)·b(θ) − b′(θ)·a(θ))`: the ray of points shared by
/// the plane at `θ` and its neighbours.
pub fn characteristic_direction(c: &ParametricCurve, theta: f64, cfg: &ToleranceConfig) -> Result<Point3> {
    c.check(theta)?;
    let (a, b) = c.eval(theta)?;
    let da = diff_central(|t| Ok(c.eval(t)?.0), theta, cfg)?;
    let db = diff_central(|t| Ok(c.eval(t)?.1), theta, cfg)?;
    let speed = da.hypot(db);
    if speed <= 1e-9 * (1.0 + a.abs() + b.abs()) {
        return Err(Error::DegenerateDirection { param: theta, speed });
    }
    Ok([-db, da, da * b - db * a])
}

/// Characteristic rays of a parametric plane family, sampled at `s·d(θ)`
/// for each `s` in `s_grid`, in `θ`-major order. Excluded and degenerate
/// parameters are skipped and recorded.
pub fn envelope_parametric_planes(
    fam: &PlaneFamily,
    c: &ParametricCurve,
    theta_grid: &[f64],
    s_grid: &[f64],
    cfg: &ToleranceConfig,
) -> Result<SampledSurface> {
    require_origin(fam)?;
    require_nonempty("theta grid", theta_grid)?;
    require_nonempty("s grid", s_grid)?;
    let mut out = SampledSurface::new("parametric curve (a, b) = g(θ)");
    for &theta in theta_grid {
        let d = match characteristic_direction(c, theta, cfg) {
            Ok(d) => d,
            Err(e @ (Error::ExcludedParameter { .. } | Error::DegenerateDirection { .. })) => {
                out.diagnostics.skip(&[theta], &e);
                continue;
            }
            Err(e) => return Err(e),
        };
        for &s in s_grid {
            let p = [s * d[0], s * d[1], s * d[2]];
            let (fr, sr) = fam.membership(|t| c.eval(t), p, theta, cfg)?;
            out.points.push(EnvelopePoint::new(p, theta, fr, sr, cfg));
        }
    }
    Ok(out)
}

/// `z = m₁(x, y)·x + m₂(x, y)·y` on `xy_grid`. The reported parameter is
/// `x/y`; stationarity is measured along the planes `t ↦ m(t, 1)` (or
/// `m(1, t)` on `y = 0`), which index the family when `m` is homogeneous of
/// degree zero.
pub fn envelope_inverse_map(
    fam: &PlaneFamily,
    c: &InverseMap,
    xy_grid: &[Point2],
    cfg: &ToleranceConfig,
) -> Result<SampledSurface> {
    require_origin(fam)?;
    let mut out = SampledSurface::new("inverse map (a, b) = m(x, y)");
    for &[x, y] in xy_grid {
        if !c.xy_domain.contains([x, y]) {
            let (what, value, iv) =
                if c.xy_domain.x.contains(x) { ("y", y, c.xy_domain.y) } else { ("x", x, c.xy_domain.x) };
            return Err(Error::OutOfDomain { what, value, lo: iv.lo, hi: iv.hi });
        }
        let (a, b) = c.eval(x, y)?;
        let p = [x, y, a * x + b * y];
        let fr = fam.f(p, a, b)?.abs();
        let (param, sr) = if y != 0.0 {
            let t = x / y;
            (t, fam.membership(|t| c.eval(t, 1.0), p, t, cfg)?.1)
        } else {
            (f64::INFINITY.copysign(x), fam.membership(|t| c.eval(1.0, t), p, 0.0, cfg)?.1)
        };
        out.points.push(EnvelopePoint::new(p, param, fr, sr, cfg));
    }
    Ok(out)
}

/// Accepted points scaled to the plane `z = 1`, with the number dropped
/// because `|z| ≤ eps`.
pub fn cross_section_z1(s: &SampledSurface, eps: f64) -> Result<(Vec<Point2>, usize)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig(format!("eps must be positive, got {eps}")));
    }
    let mut kept = Vec::new();
    let mut dropped = 0;
    for p in s.accepted() {
        let [x, y, z] = p.p;
        if z.abs() > eps {
            kept.push([x / z, y / z]);
        } else {
            dropped += 1;
        }
    }
    Ok((kept, dropped))
}

/// Stationary parameters of `x + φ′(a)·y` on the domain of `c`.
pub fn stationary_params(c: &FunctionOfA, x: f64, y: f64, cfg: &ToleranceConfig) -> Result<Vec<f64>> {
    let scan = c.domain.linspace(STATIONARY_SCAN + 1);
    let g = |a: f64| Ok(x + c.derivative(a, cfg)? * y);
    let values = scan.iter().map(|&a| sample(g, a)).collect::<Result<Vec<_>>>()?;
    roots_from_samples(&scan, &values, g, cfg)
}

/// The envelope of a function constraint as an explicit graph
/// `h(x, y) = a·x + φ(a)·y`, using the first stationary `a`. Meant for
/// constraints with invertible `φ′`, where that `a` is unique.
pub fn explicit_envelope(c: &FunctionOfA, cfg: &ToleranceConfig) -> Fn2 {
    let c = c.clone();
    let cfg = *cfg;
    std::sync::Arc::new(move |x, y| {
        let a = *stationary_params(&c, x, y, &cfg)?.first().ok_or(Error::NoRoots)?;
        Ok(a * x + c.phi(a)? * y)
    })
}

/// A point of the envelope of a planar curve family `f(x, y, a) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveEnvelopePoint {
    pub x: f64,
    pub y: f64,
    pub a: f64,
}

/// Envelope of the curve family `f(x, y, a) = 0` at each `x`.
///
/// For fixed `x`, `y(a)` is the root of `f(x, ·, a)` in `y_bracket`, and
/// the stationary `a` is a root of `∂f/∂a (x, y(a), a)` on `a_interval`.
pub fn envelope_curve_family(
    f: &Fn3,
    x_grid: &[f64],
    a_interval: Interval,
    y_bracket: Interval,
    cfg: &ToleranceConfig,
) -> Result<(Vec<CurveEnvelopePoint>, Diagnostics)> {
    let mut pts = Vec::new();
    let mut diag = Diagnostics::default();
    let scan = a_interval.linspace(STATIONARY_SCAN + 1);
    for &x in x_grid {
        let y_of = |a: f64| find_root(|y| f(x, y, a), y_bracket.lo, y_bracket.hi, cfg);
        let fa = |a: f64| {
            let y = y_of(a)?;
            diff_central(|t| f(x, y, t), a, cfg)
        };
        let values = scan.iter().map(|&a| sample(|t| fa(t).map_err(no_bracket_as_domain), a)).collect::<Result<Vec<_>>>()?;
        let roots = roots_from_samples(&scan, &values, fa, cfg)?;
        if roots.is_empty() {
            diag.skip(&[x], &Error::NoRoots);
        }
        for a in roots {
            pts.push(CurveEnvelopePoint { x, y: y_of(a)?, a });
        }
    }
    Ok((pts, diag))
}

fn no_bracket_as_domain(e: Error) -> Error {
    match e {
        Error::NoBracket { .. } => Error::Domain("no curve point in the y bracket".into()),
        e => e,
    }
}

/// Upper envelope `max_a y(a)` of an explicit curve family `y = g(x, a)`,
/// by exhaustive search over `a_grid`.
pub fn brute_force_upper_envelope(g: &Fn2, x: f64, a_grid: &[f64]) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for &a in a_grid {
        best = best.max(g(x, a)?);
    }
    Ok(best)
}

/// `φ` as the running integral of `φ′` from `a0`, with `φ(a0) = phi0`.
/// Integration is split at `breaks` so each piece is smooth.
pub fn antiderivative(phi_prime: Fn1, a0: f64, phi0: f64, breaks: Vec<f64>, cfg: &ToleranceConfig) -> Fn1 {
    let cfg = *cfg;
    std::sync::Arc::new(move |a: f64| {
        let (lo, hi, sign) = if a >= a0 { (a0, a, 1.0) } else { (a, a0, -1.0) };
        let mut cuts = vec![lo];
        cuts.extend(breaks.iter().copied().filter(|&k| k > lo && k < hi));
        cuts.push(hi);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            total += crate::numerics::integrate(|t| phi_prime(t), w[0], w[1], &cfg)?;
        }
        Ok(phi0 + sign * total)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::parse;
    use crate::families::{enumerate_branches, FunctionOfA, ImplicitRelation, ParametricCurve};
    use crate::numerics::{fn2_from_expr, Rect};
    use std::f64::consts::{FRAC_PI_2, PI};
    use std::sync::Arc;

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn reciprocal() -> FunctionOfA {
        FunctionOfA::new(Arc::new(|a| Ok(1.0 / a)), Interval::new(0.1, 10.0))
    }

    fn circle() -> Vec<Branch> {
        let rel = fn2_from_expr(&parse("(a-1)^2 + (b-1)^2 - 1").unwrap(), ["a", "b"]).unwrap();
        let c = ImplicitRelation { rel, a_domain: Interval::new(0.0, 2.0), b_domain: Interval::new(-0.5, 2.5) };
        enumerate_branches(&c, 64).unwrap()
    }

    fn upper(branches: &[Branch]) -> &Branch {
        branches.iter().find(|b| b.psi(1.0).unwrap() > 1.0).unwrap()
    }

    fn cone(sign: f64) -> ParametricCurve {
        ParametricCurve::new(
            Arc::new(move |t: f64| {
                let d = 1.0 + t.cos() + t.sin();
                Ok([sign * t.cos() / d, sign * t.sin() / d])
            }),
            Interval::new(-PI, PI),
        )
        .excluding(&[PI, -FRAC_PI_2], 1e-3)
        .periodic(2.0 * PI)
    }

    #[test]
    fn function_constraint_examples() {
        let fam = PlaneFamily::origin();
        let s = envelope_function_constraint(&fam, &reciprocal(), &[2.0, 1.0], &[4.0, 1.0, 0.0], &cfg()).unwrap();
        let p = s.points[0];
        assert!(p.accepted);
        for (got, want) in p.p.iter().zip([1.0, 4.0, 4.0]) {
            assert!((got - want).abs() < 1e-8);
        }
        assert!((s.points[4].p[2] - 2.0).abs() < 1e-8 && (s.points[4].p[0] - 1.0).abs() < 1e-8);
        assert_eq!(s.points[2].p, [0.0, 0.0, 0.0]);
        assert_eq!(s.points[5].p, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn function_constraint_on_sqrt_surface() {
        let a = linspace(0.25, 4.0, 32);
        let y = linspace(0.1, 3.0, 32);
        let s = envelope_function_constraint(&PlaneFamily::origin(), &reciprocal(), &a, &y, &cfg()).unwrap();
        assert_eq!(s.accepted().count(), 32 * 32);
        for p in s.accepted() {
            let [x, y, z] = p.p;
            assert!((z - 2.0 * (x * y).sqrt()).abs() <= 1e-8);
        }
    }

    #[test]
    fn tilted_family_is_rejected() {
        let fam = PlaneFamily::with_tilt(Arc::new(|a, b| Ok(a * b)));
        assert!(matches!(
            envelope_function_constraint(&fam, &reciprocal(), &[1.0], &[1.0], &cfg()),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn projective_examples() {
        let pts = projective_curve(&reciprocal(), &[2.0, 1.0], &cfg()).unwrap();
        assert!((pts[0][0] - 0.25).abs() < 1e-9 && (pts[0][1] - 1.0).abs() < 1e-9);
        assert!((pts[1][0] - 1.0).abs() < 1e-9 && (pts[1][1] - 2.0).abs() < 1e-9);
        for [x, z] in pts {
            assert!((z * z - 4.0 * x).abs() < 1e-8);
        }
        let constant = FunctionOfA::new(Arc::new(|_| Ok(3.0)), Interval::new(-1.0, 1.0));
        for [x, z] in projective_curve(&constant, &linspace(-1.0, 1.0, 5), &cfg()).unwrap() {
            assert_eq!((x, z), (0.0, 3.0));
        }
    }

    #[test]
    fn circle_branch_spot_values() {
        let branches = circle();
        let up = upper(&branches);
        let s = envelope_branch(&PlaneFamily::origin(), up, &[[3.0, 4.0], [1.0, 0.0], [0.0, 0.0]], &cfg()).unwrap();
        assert_eq!(s.points.len(), 3, "{:?}", s.diagnostics);
        let p = s.points[0];
        assert!(p.accepted);
        assert!((p.param - 1.6).abs() < 1e-8);
        assert!((p.p[2] - 12.0).abs() <= 1e-10, "{}", p.p[2]);
        let q = s.points[1];
        assert!(q.accepted, "{q:?}");
        assert!((q.param - 2.0).abs() < 1e-9 && (q.p[2] - 2.0).abs() < 1e-9);
        assert_eq!(s.points[2].p, [0.0; 3]);
    }

    #[test]
    fn circle_branches_lie_on_quadric() {
        let branches = circle();
        let grid: Vec<Point2> = Rect::new(Interval::new(-3.0, 3.0), Interval::new(0.0, 3.0)).interior_grid(12);
        for br in &branches {
            let s = envelope_branch(&PlaneFamily::origin(), br, &grid, &cfg()).unwrap();
            assert!(s.accepted().count() >= grid.len() - 2);
            for [x, y, z] in s.cloud() {
                let r = (z * z - 2.0 * x * z - 2.0 * y * z + 2.0 * x * y).abs() / (1.0 + x * x + y * y + z * z);
                assert!(r <= 1e-8, "{x} {y} {z} {r}");
            }
        }
    }

    #[test]
    fn hyperbola_branch_recovers_sqrt_surface() {
        let rel = fn2_from_expr(&parse("a*b - 1").unwrap(), ["a", "b"]).unwrap();
        let c = ImplicitRelation { rel, a_domain: Interval::new(0.1, 10.0), b_domain: Interval::new(0.0, 11.0) };
        let br = &enumerate_branches(&c, 64).unwrap()[0];
        let s = envelope_branch(&PlaneFamily::origin(), br, &[[1.0, 1.0]], &cfg()).unwrap();
        let p = s.points[0];
        assert!((p.param - 1.0).abs() < 1e-8 && (p.p[2] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn cone_rays() {
        let c = cone(1.0);
        let d = characteristic_direction(&c, 0.0, &cfg()).unwrap();
        let p = d.map(|v| v / d[2]);
        for (got, want) in p.iter().zip([2.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-8, "{p:?}");
        }
        let d = characteristic_direction(&c, FRAC_PI_2, &cfg()).unwrap();
        let p = d.map(|v| v / d[2]);
        for (got, want) in p.iter().zip([1.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-8, "{p:?}");
        }
        let thetas: Vec<f64> = (0..64).map(|i| -PI + (i as f64 + 0.5) * 2.0 * PI / 64.0).collect();
        let s = envelope_parametric_planes(&PlaneFamily::origin(), &c, &thetas, &DEFAULT_S_GRID, &cfg()).unwrap();
        assert!(s.accepted().count() > 300);
        for [x, y, z] in s.cloud() {
            let r = ((x - z).powi(2) + (y - z).powi(2) - z * z).abs() / (1.0 + x * x + y * y + z * z);
            assert!(r <= 1e-8);
        }
        let s = envelope_parametric_planes(&PlaneFamily::origin(), &c, &[PI, 0.0], &[1.0], &cfg()).unwrap();
        assert_eq!(s.diagnostics.skipped.len(), 1);
        assert_eq!(s.diagnostics.skipped[0].kind, "excluded_parameter");
    }

    #[test]
    fn hyperbola_reparametrization() {
        let c = ParametricCurve::new(Arc::new(|t: f64| Ok([t, 1.0 / t])), Interval::new(0.5, 4.0));
        let d = characteristic_direction(&c, 2.0, &cfg()).unwrap();
        let s = 4.0 / d[1];
        for (got, want) in d.iter().map(|v| v * s).zip([1.0, 4.0, 4.0]) {
            assert!((got - want).abs() < 1e-8);
        }
    }

    #[test]
    fn inverse_map_examples() {
        let m = InverseMap {
            m: Arc::new(|x, y| Ok([3.0 * x * x / (y * y), -2.0 * x.powi(3) / y.powi(3)])),
            xy_domain: Rect::new(Interval::new(-1.0, 2.0), Interval::new(0.5, 2.0)),
        };
        let s = envelope_inverse_map(&PlaneFamily::origin(), &m, &[[1.0, 1.0], [2.0, 1.0], [0.0, 1.0]], &cfg()).unwrap();
        let z: Vec<f64> = s.points.iter().map(|p| p.p[2]).collect();
        assert_eq!(z, vec![1.0, 8.0, 0.0]);
        assert!(s.points.iter().all(|p| p.accepted));
        assert!(matches!(
            envelope_inverse_map(&PlaneFamily::origin(), &m, &[[0.0, 0.0]], &cfg()),
            Err(Error::OutOfDomain { what: "y", .. })
        ));
    }

    #[test]
    fn cross_section_examples() {
        let cfg = cfg();
        let mk = |p: Point3| EnvelopePoint::new(p, 0.0, 0.0, 0.0, &cfg);
        let s = SampledSurface {
            points: vec![mk([1.0, 4.0, 4.0]), mk([0.0, 0.0, 0.0])],
            source: String::new(),
            diagnostics: Diagnostics::default(),
        };
        let (pts, dropped) = cross_section_z1(&s, 1e-12).unwrap();
        assert_eq!(pts, vec![[0.25, 1.0]]);
        assert_eq!(dropped, 1);
        assert!(cross_section_z1(&s, 0.0).is_err());
    }

    #[test]
    fn curve_family_envelope_matches_hyperbola() {
        let f: Fn3 = Arc::new(|x, y, a| Ok(a * a * x + y - a));
        let xs = linspace(0.1, 10.0, 16);
        let (pts, diag) = envelope_curve_family(&f, &xs, Interval::new(0.0, 10.0), Interval::new(-200.0, 200.0), &cfg()).unwrap();
        assert!(diag.skipped.is_empty());
        assert_eq!(pts.len(), xs.len());
        for p in pts {
            assert!((p.y - 1.0 / (4.0 * p.x)).abs() <= 1e-8, "{p:?}");
        }
        let g: Fn2 = Arc::new(|x, a| Ok(a - a * a * x));
        let a_grid = linspace(0.0, 10.0, 200_001);
        let y = brute_force_upper_envelope(&g, 0.5, &a_grid).unwrap();
        assert!((y - 0.5).abs() < 1e-4);
    }

    #[test]
    fn explicit_envelope_of_invertible_constraint() {
        let c = FunctionOfA::new(Arc::new(|a| Ok(-a * a / 2.0)), Interval::new(-10.0, 10.0))
            .with_derivative(Arc::new(|a| Ok(-a)));
        let h = explicit_envelope(&c, &cfg());
        assert!((h(1.0, 2.0).unwrap() - 0.25).abs() < 1e-12);
        let h = explicit_envelope(&reciprocal(), &cfg());
        assert!((h(1.0, 4.0).unwrap() - 4.0).abs() < 1e-10);
    }

    #[test]
    fn antiderivative_matches_closed_form() {
        let phi = antiderivative(Arc::new(|a| Ok(3.0 * a * a)), 0.0, 1.0, vec![0.5], &cfg());
        assert!((phi(2.0).unwrap() - 9.0).abs() < 1e-12);
        assert!((phi(-1.0).unwrap() - 0.0).abs() < 1e-12);
    }
}

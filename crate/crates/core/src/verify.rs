//! Checks on candidate surfaces: the Clairaut residual, Euler homogeneity,
//! tangency of member planes and implicit membership of point clouds.

use std::fmt;

use serde::Serialize;

use crate::exprlang::Expr;
use crate::numerics::{
    diff_central, fn2_from_expr, fn3_from_expr, grad2_from_expr, grad3_from_expr, gradient3, Fn2, Fn3, Grad2, Grad3, Rect,
    ToleranceConfig,
};
use crate::{Error, Point2, Point3, Result};

/// `|F_z|` at or below this marks a vertical tangent plane.
pub const VERTICAL_TOL: f64 = 1e-6;
/// Largest angle, in radians, between normals counted as parallel.
pub const ANGLE_TOL: f64 = 1e-5;

/// `z = h(x, y)` over a rectangle.
#[derive(Clone)]
pub struct ExplicitGraph {
    pub h: Fn2,
    pub domain: Rect,
    /// Exact partials, when known; otherwise central differences are used.
    pub grad: Option<Grad2>,
}

impl ExplicitGraph {
    pub fn new(h: Fn2, domain: Rect) -> Self {
        ExplicitGraph { h, domain, grad: None }
    }

    /// A graph of an expression in `x` and `y`, with partials by dual numbers.
    pub fn from_expr(expr: &Expr, domain: Rect) -> Result<Self> {
        Ok(ExplicitGraph {
            h: fn2_from_expr(expr, ["x", "y"])?,
            domain,
            grad: Some(grad2_from_expr(expr, ["x", "y"])?),
        })
    }
}

/// `F(x, y, z) = 0`.
#[derive(Clone)]
pub struct ImplicitLevelSet {
    pub f: Fn3,
    /// Exact gradient, when known; otherwise central differences are used.
    pub grad: Option<Grad3>,
}

impl ImplicitLevelSet {
    pub fn new(f: Fn3) -> Self {
        ImplicitLevelSet { f, grad: None }
    }

    /// The level set of an expression in `x`, `y` and `z`, with its gradient
    /// by dual numbers.
    pub fn from_expr(expr: &Expr) -> Result<Self> {
        let vars = ["x", "y", "z"];
        Ok(ImplicitLevelSet { f: fn3_from_expr(expr, vars)?, grad: Some(grad3_from_expr(expr, vars)?) })
    }

    fn gradient(&self, p: Point3, cfg: &ToleranceConfig) -> Result<[f64; 3]> {
        match &self.grad {
            Some(g) => g(p[0], p[1], p[2]),
            None => gradient3(|x, y, z| (self.f)(x, y, z), p, cfg),
        }
    }
}

#[derive(Clone)]
pub enum Surface {
    ExplicitGraph(ExplicitGraph),
    ImplicitLevelSet(ImplicitLevelSet),
    SampledCloud(Vec<Point3>),
}

impl fmt::Debug for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Surface::ExplicitGraph(g) => write!(f, "ExplicitGraph({:?})", g.domain),
            Surface::ImplicitLevelSet(_) => write!(f, "ImplicitLevelSet"),
            Surface::SampledCloud(p) => write!(f, "SampledCloud({} points)", p.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub max_abs: f64,
    pub mean_abs: f64,
    pub n_evaluated: usize,
    pub n_skipped: usize,
    pub worst_point: Vec<f64>,
}

impl ResidualReport {
    fn collect(results: impl IntoIterator<Item = (Vec<f64>, Option<f64>)>) -> Self {
        let mut r = ResidualReport { max_abs: 0.0, mean_abs: 0.0, n_evaluated: 0, n_skipped: 0, worst_point: Vec::new() };
        let mut sum = 0.0;
        for (p, v) in results {
            match v {
                Some(v) => {
                    let v = v.abs();
                    if r.n_evaluated == 0 || v > r.max_abs || v.is_nan() {
                        r.max_abs = v;
                        r.worst_point = p;
                    }
                    sum += v;
                    r.n_evaluated += 1;
                }
                None => r.n_skipped += 1,
            }
        }
        if r.n_evaluated > 0 {
            r.mean_abs = sum / r.n_evaluated as f64;
        }
        r
    }
}

fn partials(s: &ExplicitGraph, p: Point2, cfg: &ToleranceConfig) -> Result<(f64, f64, f64)> {
    let [x, y] = p;
    let (hx, hy) = (cfg.step_at(x), cfg.step_at(y));
    let (dx, dy) = (s.domain.x, s.domain.y);
    if x - hx < dx.lo || x + hx > dx.hi {
        return Err(Error::OutOfDomain { what: "x", value: x, lo: dx.lo + hx, hi: dx.hi - hx });
    }
    if y - hy < dy.lo || y + hy > dy.hi {
        return Err(Error::OutOfDomain { what: "y", value: y, lo: dy.lo + hy, hi: dy.hi - hy });
    }
    let h = (s.h)(x, y)?;
    if let Some(g) = &s.grad {
        let [h_x, h_y] = g(x, y)?;
        return Ok((h, h_x, h_y));
    }
    let h_x = diff_central(|t| (s.h)(t, y), x, cfg)?;
    let h_y = diff_central(|t| (s.h)(x, t), y, cfg)?;
    Ok((h, h_x, h_y))
}

/// `x·h_x + y·h_y + k(h_x, h_y) − h` at `p`. Partials come from the
/// graph's exact gradient if it has one, else from central differences.
pub fn clairaut_residual_explicit(
    s: &ExplicitGraph,
    p: Point2,
    tilt: Option<&Fn2>,
    cfg: &ToleranceConfig,
) -> Result<f64> {
    let (h, h_x, h_y) = partials(s, p, cfg)?;
    let k = match tilt {
        Some(k) => k(h_x, h_y)?,
        None => 0.0,
    };
    Ok(p[0] * h_x + p[1] * h_y + k - h)
}

/// `x·z_x + y·z_y − z` on `F = 0`, with `z_x = −F_x/F_z`, `z_y = −F_y/F_z`.
pub fn clairaut_residual_implicit(s: &ImplicitLevelSet, p: Point3, cfg: &ToleranceConfig) -> Result<f64> {
    let [x, y, z] = p;
    let value = (s.f)(x, y, z)?;
    if !(value.abs() <= cfg.residual_tol * (1.0 + norm(p))) {
        return Err(Error::NotOnSurface { residual: value.abs() });
    }
    let [fx, fy, fz] = s.gradient(p, cfg)?;
    if fz.abs() <= VERTICAL_TOL {
        return Err(Error::VerticalTangent { fz });
    }
    Ok(-x * fx / fz - y * fy / fz - z)
}

/// `x·h_x + y·h_y − n·h` at `p`.
pub fn euler_residual(s: &ExplicitGraph, n: f64, p: Point2, cfg: &ToleranceConfig) -> Result<f64> {
    let (h, h_x, h_y) = partials(s, p, cfg)?;
    Ok(p[0] * h_x + p[1] * h_y - n * h)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityReport {
    pub degree: f64,
    /// Largest `|h(sx, sy) − sⁿ·h(x, y)| / (1 + |sⁿ·h(x, y)|)`.
    pub max_rel_error: f64,
    pub n_evaluated: usize,
    pub worst_point: Point2,
    pub worst_scale: f64,
}

/// Test `h(sx, sy) = sⁿ·h(x, y)` on a `samples × samples` interior grid of
/// the graph's domain for every `s` in `s_values`.
pub fn homogeneity_check(s: &ExplicitGraph, n: f64, samples: usize, s_values: &[f64]) -> Result<HomogeneityReport> {
    if samples == 0 || s_values.is_empty() {
        return Err(Error::InvalidConfig("homogeneity check needs samples and scales".into()));
    }
    let mut r = HomogeneityReport { degree: n, max_rel_error: 0.0, n_evaluated: 0, worst_point: [0.0; 2], worst_scale: 1.0 };
    for [x, y] in s.domain.interior_grid(samples) {
        let h = (s.h)(x, y)?;
        for &sc in s_values {
            let expect = sc.powf(n) * h;
            let got = (s.h)(sc * x, sc * y)?;
            let err = (got - expect).abs() / (1.0 + expect.abs());
            if r.n_evaluated == 0 || err > r.max_rel_error || err.is_nan() {
                r.max_rel_error = err;
                r.worst_point = [x, y];
                r.worst_scale = sc;
            }
            r.n_evaluated += 1;
        }
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TangencyReport {
    pub tangent: bool,
    /// `|a·x + b·y − z|`.
    pub plane_residual: f64,
    /// `|h(x, y) − z|` or `|F(p)|`.
    pub surface_residual: f64,
    /// Angle in radians between the surface normal and `(a, b, −1)`.
    pub angle: f64,
}

fn norm(v: Point3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn angle_between(u: Point3, v: Point3) -> f64 {
    let cross = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    norm(cross).atan2(dot.abs())
}

/// Whether the plane `z = a·x + b·y` touches `surface` at `p`: `p` lies on
/// both, and their normals are parallel within [`ANGLE_TOL`].
pub fn tangency_check(surface: &Surface, a: f64, b: f64, p: Point3, cfg: &ToleranceConfig) -> Result<TangencyReport> {
    let [x, y, z] = p;
    let (surface_residual, normal) = match surface {
        Surface::ExplicitGraph(g) => {
            let (h, h_x, h_y) = partials(g, [x, y], cfg)?;
            ((h - z).abs(), [h_x, h_y, -1.0])
        }
        Surface::ImplicitLevelSet(s) => {
            let value = (s.f)(x, y, z)?;
            let grad = s.gradient(p, cfg)?;
            if grad[2].abs() <= VERTICAL_TOL {
                return Err(Error::VerticalTangent { fz: grad[2] });
            }
            (value.abs(), grad)
        }
        Surface::SampledCloud(_) => {
            return Err(Error::InvalidConfig("tangency needs an explicit or implicit surface".into()));
        }
    };
    let plane_residual = (a * x + b * y - z).abs();
    let angle = angle_between(normal, [a, b, -1.0]);
    let tol = cfg.residual_tol * (1.0 + norm(p));
    let tangent = plane_residual <= tol && surface_residual <= tol && angle <= ANGLE_TOL;
    Ok(TangencyReport { tangent, plane_residual, surface_residual, angle })
}

/// `|F(p)| / (1 + ‖p‖²)` over a cloud; points where `F` fails are skipped.
pub fn implicit_membership(s: &ImplicitLevelSet, cloud: &[Point3]) -> ResidualReport {
    ResidualReport::collect(cloud.iter().map(|&p| {
        let v = (s.f)(p[0], p[1], p[2]).ok().map(|v| v / (1.0 + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
        (p.to_vec(), v)
    }))
}

/// [`clairaut_residual_explicit`] over a grid; points where it fails are skipped.
pub fn clairaut_report_explicit(
    s: &ExplicitGraph,
    grid: &[Point2],
    tilt: Option<&Fn2>,
    cfg: &ToleranceConfig,
) -> ResidualReport {
    ResidualReport::collect(grid.iter().map(|&p| (p.to_vec(), clairaut_residual_explicit(s, p, tilt, cfg).ok())))
}

/// [`clairaut_residual_implicit`] over a cloud. Vertical tangents and
/// points off the surface are skipped; other errors are returned.
pub fn clairaut_report_implicit(s: &ImplicitLevelSet, cloud: &[Point3], cfg: &ToleranceConfig) -> Result<ResidualReport> {
    let mut results = Vec::with_capacity(cloud.len());
    for &p in cloud {
        let v = match clairaut_residual_implicit(s, p, cfg) {
            Ok(v) => Some(v),
            Err(Error::VerticalTangent { .. } | Error::NotOnSurface { .. }) => None,
            Err(e) => return Err(e),
        };
        results.push((p.to_vec(), v));
    }
    Ok(ResidualReport::collect(results))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Interval;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn positive() -> Rect {
        Rect::new(Interval::new(0.0, 10.0), Interval::new(0.0, 10.0))
    }

    fn graph(h: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> ExplicitGraph {
        ExplicitGraph::new(Arc::new(move |x, y| Ok(h(x, y))), positive())
    }

    fn level(f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> ImplicitLevelSet {
        ImplicitLevelSet::new(Arc::new(move |x, y, z| Ok(f(x, y, z))))
    }

    fn cone() -> ImplicitLevelSet {
        level(|x, y, z| (x - z).powi(2) + (y - z).powi(2) - z * z)
    }

    fn quadric() -> ImplicitLevelSet {
        level(|x, y, z| z * z - 2.0 * x * z - 2.0 * y * z + 2.0 * x * y)
    }

    #[test]
    fn explicit_examples() {
        let r = clairaut_residual_explicit(&graph(|x, y| (x * y).sqrt()), [1.0, 4.0], None, &cfg()).unwrap();
        assert!(r.abs() < 1e-9);
        let r = clairaut_residual_explicit(&graph(|x, y| x + y + (2.0 * x * y).sqrt()), [2.0, 2.0], None, &cfg()).unwrap();
        assert!(r.abs() < 1e-7);
        let r = clairaut_residual_explicit(&graph(|x, y| x * x + y * y), [1.0, 1.0], None, &cfg()).unwrap();
        assert!((r - 2.0).abs() < 1e-8);
    }

    #[test]
    fn explicit_with_tilt() {
        // z = a·x + b·y + a·b has the envelope z = −x·y
        let k: Fn2 = Arc::new(|p, q| Ok(p * q));
        let s = ExplicitGraph::new(Arc::new(|x, y| Ok(-x * y)), Rect::new(Interval::new(-3.0, 3.0), Interval::new(-3.0, 3.0)));
        let r = clairaut_residual_explicit(&s, [1.5, -0.5], Some(&k), &cfg()).unwrap();
        assert!(r.abs() < 1e-8);
    }

    #[test]
    fn explicit_needs_interior_point() {
        let e = clairaut_residual_explicit(&graph(|x, y| (x * y).sqrt()), [0.0, 1.0], None, &cfg());
        assert!(matches!(e, Err(Error::OutOfDomain { what: "x", .. })));
    }

    #[test]
    fn implicit_examples() {
        let r = clairaut_residual_implicit(&quadric(), [3.0, 4.0, 12.0], &cfg()).unwrap();
        assert!(r.abs() < 1e-8);
        let r = clairaut_residual_implicit(&cone(), [2.0, 1.0, 1.0], &cfg()).unwrap();
        assert!(r.abs() < 1e-8);
        let plane = level(|x, y, z| 2.0 * x + 0.5 * y - z);
        assert!(clairaut_residual_implicit(&plane, [1.0, 2.0, 3.0], &cfg()).unwrap().abs() < 1e-9);
    }

    #[test]
    fn implicit_errors() {
        assert!(matches!(clairaut_residual_implicit(&cone(), [2.0, 1.0, 2.0], &cfg()), Err(Error::NotOnSurface { .. })));
        // F_z = 2(z − x − y) vanishes on the cone's rim y = 0
        assert!(matches!(clairaut_residual_implicit(&cone(), [1.0, 0.0, 1.0], &cfg()), Err(Error::VerticalTangent { .. })));
        let vertical = level(|x, _, z| x * x + z * z - 1.0);
        assert!(matches!(clairaut_residual_implicit(&vertical, [1.0, 0.0, 0.0], &cfg()), Err(Error::VerticalTangent { .. })));
    }

    #[test]
    fn homogeneity_examples() {
        let s = [0.5, 2.0, 3.0];
        let r = homogeneity_check(&graph(|x, y| (x * y).sqrt()), 1.0, 10, &s).unwrap();
        assert!(r.max_rel_error <= 1e-12);
        let r = homogeneity_check(&graph(|x, y| x.powi(3) / (y * y)), 1.0, 10, &s).unwrap();
        assert!(r.max_rel_error <= 1e-12);
        let sq = graph(|x, y| x * x + y * y);
        let r = homogeneity_check(&sq, 1.0, 10, &s).unwrap();
        assert!(r.max_rel_error > 0.5);
        assert!(homogeneity_check(&sq, 2.0, 10, &s).unwrap().max_rel_error <= 1e-12);
    }

    #[test]
    fn euler_examples() {
        let p = [1.0, 1.0];
        assert!(euler_residual(&graph(|x, y| x * x + y * y), 2.0, p, &cfg()).unwrap().abs() < 1e-8);
        assert!(euler_residual(&graph(|x, y| x.powf(0.3) * y.powf(0.7)), 1.0, p, &cfg()).unwrap().abs() < 1e-7);
        assert!((euler_residual(&graph(|x, y| (x * y).sqrt()), 2.0, p, &cfg()).unwrap() + 1.0).abs() < 1e-8);
    }

    #[test]
    fn tangency_examples() {
        let t = tangency_check(&Surface::ImplicitLevelSet(cone()), 0.5, 0.0, [2.0, 1.0, 1.0], &cfg()).unwrap();
        assert!(t.tangent, "{t:?}");
        let s = Surface::ExplicitGraph(graph(|x, y| 2.0 * (x * y).sqrt()));
        assert!(tangency_check(&s, 2.0, 0.5, [1.0, 4.0, 4.0], &cfg()).unwrap().tangent);
        let t = tangency_check(&s, 1.0, 1.0, [1.0, 4.0, 4.0], &cfg()).unwrap();
        assert!(!t.tangent && (t.plane_residual - 1.0).abs() < 1e-12);
        // the negated signs: the plane at θ = 0 would be z = −x/2
        let t = tangency_check(&Surface::ImplicitLevelSet(cone()), -0.5, 0.0, [2.0, 1.0, 1.0], &cfg()).unwrap();
        assert!(!t.tangent);
        assert!(tangency_check(&Surface::SampledCloud(vec![]), 0.0, 0.0, [0.0; 3], &cfg()).is_err());
    }

    #[test]
    fn membership_examples() {
        let r = implicit_membership(&level(|x, _, z| z - x), &[[1.0, 1.0, 1.0]]);
        assert_eq!((r.max_abs, r.n_evaluated, r.n_skipped), (0.0, 1, 0));
        let s = ImplicitLevelSet::new(Arc::new(|x, _, _| if x < 0.0 { Err(Error::Domain("neg".into())) } else { Ok(x) }));
        let r = implicit_membership(&s, &[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        assert_eq!((r.n_evaluated, r.n_skipped), (2, 1));
        assert_eq!(r.max_abs, 0.5);
        assert_eq!(r.worst_point, vec![1.0, 0.0, 0.0]);
        assert_eq!(r.mean_abs, 0.25);
    }

    #[test]
    fn explicit_and_implicit_cone_agree() {
        let lower = graph(|x, y| x + y - (2.0 * x * y).sqrt());
        let upper = graph(|x, y| x + y + (2.0 * x * y).sqrt());
        for [x, y] in Rect::new(Interval::new(0.2, 5.0), Interval::new(0.2, 5.0)).interior_grid(10) {
            for g in [&lower, &upper] {
                let z = (g.h)(x, y).unwrap();
                let e = clairaut_residual_explicit(g, [x, y], None, &cfg()).unwrap();
                match clairaut_residual_implicit(&cone(), [x, y, z], &cfg()) {
                    Ok(i) => assert!((e - i).abs() <= 1e-6),
                    Err(Error::VerticalTangent { .. }) => {}
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn planes_solve_the_equation(a in -50.0f64..50.0, b in -50.0f64..50.0, x in 0.5f64..9.5, y in 0.5f64..9.5) {
            let e = crate::exprlang::parse(&format!("{a:?}*x + {b:?}*y")).unwrap();
            let s = ExplicitGraph::from_expr(&e, positive()).unwrap();
            let r = clairaut_residual_explicit(&s, [x, y], None, &cfg()).unwrap();
            prop_assert!(r.abs() <= 1e-12, "{}", r);
            // central differences lose the identity only to rounding
            let fd = ExplicitGraph::new(s.h.clone(), positive());
            let r = clairaut_residual_explicit(&fd, [x, y], None, &cfg()).unwrap();
            prop_assert!(r.abs() <= 1e-6, "{}", r);
        }

        #[test]
        fn euler_links_to_clairaut(n in 0.5f64..3.0, x in 0.5f64..9.0, y in 0.5f64..9.0) {
            let s = graph(move |x, y| (x * x + y * y).powf(n / 2.0));
            let e = euler_residual(&s, n, [x, y], &cfg()).unwrap();
            let c = clairaut_residual_explicit(&s, [x, y], None, &cfg()).unwrap();
            let h = (s.h)(x, y).unwrap();
            prop_assert!(e.abs() <= 1e-6 * (1.0 + h.abs()));
            // x·h_x + y·h_y − h = n·h − h
            prop_assert!((c - (n - 1.0) * h).abs() <= 1e-6 * (1.0 + h.abs()));
        }
    }
}

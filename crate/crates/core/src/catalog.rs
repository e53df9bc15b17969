//! Named, runnable reproductions of the worked examples.
//!
//! Every entry bundles a family, its constraint, the surface the envelope
//! should reproduce and a battery of checks. [`run`] executes the battery
//! and returns a report together with the point clouds it built.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use serde::Serialize;

use crate::analysis::{
    classify_curve_point, classify_locus, detect_cusp, detect_multivalued, invertibility_check, ClassifiedPoint,
    Label, DEFAULT_RADIUS_SEP,
};
use crate::envelope::{
    antiderivative, brute_force_upper_envelope, characteristic_direction, cross_section_z1, envelope_branch,
    envelope_curve_family, envelope_function_constraint, envelope_inverse_map, envelope_parametric_planes,
    explicit_envelope, projective_curve, EnvelopePoint, SampledSurface, DEFAULT_S_GRID, STATIONARITY_TOL,
};
use crate::exprlang::parse;
use crate::families::{
    enumerate_branches, ConstraintCurve, FunctionOfA, ImplicitRelation, InverseMap, ParametricCurve, PlaneFamily,
    DEFAULT_EXCLUSION_RADIUS,
};
use crate::numerics::{
    fn1_from_expr, fn2_from_expr, fn3_from_expr, grad2_from_expr, integrate, linspace, CurveFn, Fn1, Fn2, Fn3,
    Interval, Rect, ToleranceConfig,
};
use crate::verify::{
    clairaut_report_explicit, clairaut_report_implicit, euler_residual, homogeneity_check, implicit_membership,
    tangency_check, ExplicitGraph, ImplicitLevelSet, Surface,
};
use crate::{Error, Point2, Result};

/// Names of all entries, in run order.
pub const NAMES: [&str; 11] = [
    "bimodal_spline",
    "chojnacki_cusp",
    "circle_relation",
    "euler_generator",
    "goursat_quartic",
    "hyperbola_envelope",
    "neg_quadratic",
    "parabola_family",
    "power_alpha",
    "sqrt_xy",
    "tilted_cone",
];

/// Exponents used by `power_alpha`.
pub const POWER_ALPHAS: [f64; 3] = [0.3, 0.5, 0.9];
/// Default `H(w)` for `euler_generator`.
pub const DEFAULT_GENERATOR: &str = "2 + sin(w)";
/// Scales used by the scaling-closure check.
pub const CLOSURE_SCALES: [f64; 3] = [0.5, 2.0, -1.0];
/// Points per surface used by the scaling-closure check.
pub const CLOSURE_SAMPLES: usize = 100;
/// Points dropped from a `z = 1` cross-section when `|z|` is at most this.
pub const CROSS_SECTION_EPS: f64 = 1e-12;
/// Half-width of the square `|X|, |Y| ≤ w` searched for multivalued
/// witnesses. Points with `z` near zero land far outside it; rays through
/// them say nothing about folds of the surface itself.
pub const SECTION_WINDOW: f64 = 10.0;

/// Cross-section points inside [`SECTION_WINDOW`].
pub fn windowed(points: &[Point2]) -> Vec<Point2> {
    points.iter().copied().filter(|p| p[0].abs() <= SECTION_WINDOW && p[1].abs() <= SECTION_WINDOW).collect()
}

/// The family an entry draws its members from.
#[derive(Clone, Debug)]
pub enum Family {
    Planes(PlaneFamily),
    /// Plane curves `f(x, y, a) = 0`.
    Curves(CurveFamily),
}

#[derive(Clone)]
pub struct CurveFamily(pub Fn3);

impl std::fmt::Debug for CurveFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("f(x, y, a)")
    }
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub family: Family,
    pub constraint: Option<ConstraintCurve>,
    /// Implicit surface the envelope cloud should lie on.
    pub expected: Option<ImplicitLevelSetNamed>,
    /// Closed-form solutions of the equation tied to this entry.
    pub explicit: Vec<(String, ExplicitGraphNamed)>,
    pub notes: &'static str,
}

/// An implicit surface with its defining expression.
#[derive(Clone)]
pub struct ImplicitLevelSetNamed {
    pub expr: String,
    pub surface: ImplicitLevelSet,
}

/// An explicit graph with its defining expression.
#[derive(Clone)]
pub struct ExplicitGraphNamed {
    pub expr: String,
    pub graph: ExplicitGraph,
}

impl std::fmt::Debug for ImplicitLevelSetNamed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} = 0", self.expr)
    }
}

impl std::fmt::Debug for ExplicitGraphNamed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "z = {}", self.expr)
    }
}

fn implicit(expr: &str) -> Result<ImplicitLevelSetNamed> {
    Ok(ImplicitLevelSetNamed { expr: expr.to_string(), surface: ImplicitLevelSet::from_expr(&parse(expr)?)? })
}

fn explicit(expr: &str, domain: Rect) -> Result<ExplicitGraphNamed> {
    Ok(ExplicitGraphNamed { expr: expr.to_string(), graph: ExplicitGraph::from_expr(&parse(expr)?, domain)? })
}

fn rect(x: (f64, f64), y: (f64, f64)) -> Rect {
    Rect::new(Interval::new(x.0, x.1), Interval::new(y.0, y.1))
}

/// The positive quadrant used for surfaces built from square roots.
fn quadrant() -> Rect {
    rect((0.1, 5.0), (0.1, 5.0))
}

/// One check of an entry's battery.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), passed: value <= tolerance, value, tolerance, detail: String::new() }
    }

    fn holds(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, value: passed as u8 as f64, tolerance: 1.0, detail: detail.into() }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

/// A point cloud built while running an entry.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedSurface {
    pub name: String,
    pub surface: SampledSurface,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceSummary {
    pub name: String,
    pub points: usize,
    pub accepted: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryReport {
    pub name: String,
    pub passed: bool,
    pub notes: String,
    pub checks: Vec<Check>,
    pub classified: Vec<ClassifiedPoint>,
    pub surfaces: Vec<SurfaceSummary>,
    #[serde(skip)]
    pub clouds: Vec<NamedSurface>,
}

impl EntryReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn cloud(&self, name: &str) -> Option<&SampledSurface> {
        self.clouds.iter().find(|c| c.name == name).map(|c| &c.surface)
    }
}

struct Battery {
    checks: Vec<Check>,
    classified: Vec<ClassifiedPoint>,
    clouds: Vec<NamedSurface>,
}

impl Battery {
    fn new() -> Self {
        Battery { checks: Vec::new(), classified: Vec::new(), clouds: Vec::new() }
    }

    fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn cloud(&mut self, name: &str, surface: SampledSurface) {
        self.clouds.push(NamedSurface { name: name.to_string(), surface });
    }

    fn finish(self, entry: &CatalogEntry) -> EntryReport {
        let surfaces = self
            .clouds
            .iter()
            .map(|c| SurfaceSummary {
                name: c.name.clone(),
                points: c.surface.points.len(),
                accepted: c.surface.accepted().count(),
                skipped: c.surface.diagnostics.skipped.len(),
            })
            .collect();
        EntryReport {
            name: entry.name.to_string(),
            passed: self.checks.iter().all(|c| c.passed),
            notes: entry.notes.to_string(),
            checks: self.checks,
            classified: self.classified,
            surfaces,
            clouds: self.clouds,
        }
    }
}

pub fn list() -> &'static [&'static str] {
    &NAMES
}

/// The bimodal spline `φ′`: two bumps `((a − k)² − 1)²`, `k = 1, 3`,
/// lowered to meet at height `0.5` between them, zero outside `[0, 4]`.
pub fn spline_phi_prime(a: f64) -> f64 {
    match spline_piece(a) {
        Some(i) => SPLINE_PIECES[i](a),
        None => 0.0,
    }
}

/// The four polynomial pieces of [`spline_phi_prime`], on `[i, i + 1]`.
pub const SPLINE_PIECES: [fn(f64) -> f64; 4] = [
    |a| ((a - 1.0).powi(2) - 1.0).powi(2),
    |a| 0.5 * ((a - 1.0).powi(2) - 1.0).powi(2) + 0.5,
    |a| 0.5 * ((a - 3.0).powi(2) - 1.0).powi(2) + 0.5,
    |a| ((a - 3.0).powi(2) - 1.0).powi(2),
];

fn spline_piece(a: f64) -> Option<usize> {
    if (0.0..=4.0).contains(&a) {
        Some((a.floor() as usize).min(3))
    } else {
        None
    }
}

/// The cone constraint; `sign = -1` gives the negated, non-tangent variant.
pub fn cone_constraint(sign: f64) -> ParametricCurve {
    let g: CurveFn = Arc::new(move |t: f64| {
        let d = 1.0 + t.cos() + t.sin();
        if d == 0.0 {
            return Err(Error::Domain(format!("cone parametrization is singular at θ = {t}")));
        }
        Ok([sign * t.cos() / d, sign * t.sin() / d])
    });
    ParametricCurve::new(g, Interval::new(-PI, PI))
        .excluding(&[PI, -FRAC_PI_2], DEFAULT_EXCLUSION_RADIUS)
        .periodic(2.0 * PI)
}

fn chojnacki_map() -> InverseMap {
    InverseMap {
        m: Arc::new(|x, y| Ok([3.0 * x * x / (y * y), -2.0 * x.powi(3) / y.powi(3)])),
        xy_domain: rect((-1.0, 1.0), (0.5, 2.0)),
    }
}

/// The `(a, b) = ∇h` inverse map of an explicit expression `h(x, y)`.
fn gradient_map(h: &str, domain: Rect) -> Result<InverseMap> {
    let g = grad2_from_expr(&parse(h)?, ["x", "y"])?;
    Ok(InverseMap { m: g, xy_domain: domain })
}

/// `√(xy)·H(x/y)` with `H` given as an expression in `w`.
pub fn euler_generator_expr(h_of_w: &str) -> Result<String> {
    let h = parse(h_of_w)?;
    if let Some(v) = h.free_vars().iter().find(|v| v.as_str() != "w") {
        return Err(Error::InvalidConfig(format!("generator H must depend on w only, found '{v}'")));
    }
    let h = h.to_string().replace('w', "(x/y)");
    Ok(format!("sqrt(x*y)*({h})"))
}

fn plane_entry(
    name: &'static str,
    constraint: Option<ConstraintCurve>,
    expected: Option<&str>,
    explicit_solutions: &[(&str, Rect)],
    notes: &'static str,
) -> Result<CatalogEntry> {
    Ok(CatalogEntry {
        name,
        family: Family::Planes(PlaneFamily::origin()),
        constraint,
        expected: expected.map(implicit).transpose()?,
        explicit: explicit_solutions
            .iter()
            .map(|&(e, d)| Ok((e.to_string(), explicit(e, d)?)))
            .collect::<Result<Vec<_>>>()?,
        notes,
    })
}

fn reciprocal() -> Result<FunctionOfA> {
    FunctionOfA::from_exprs(&parse("1/a")?, None, Interval::new(0.1, 10.0), true)
}

fn neg_quadratic() -> Result<FunctionOfA> {
    FunctionOfA::from_exprs(&parse("-a^2/2")?, None, Interval::new(-10.0, 10.0), true)
}

fn bimodal() -> FunctionOfA {
    let cfg = ToleranceConfig::default();
    let dphi: Fn1 = Arc::new(|a| Ok(spline_phi_prime(a)));
    let phi = antiderivative(dphi.clone(), 0.0, 0.0, vec![1.0, 2.0, 3.0], &cfg);
    FunctionOfA::new(phi, Interval::new(0.0, 4.0)).with_derivative(dphi)
}

fn circle() -> Result<ImplicitRelation> {
    Ok(ImplicitRelation {
        rel: fn2_from_expr(&parse("(a-1)^2 + (b-1)^2 - 1")?, ["a", "b"])?,
        a_domain: Interval::new(0.0, 2.0),
        b_domain: Interval::new(0.0, 2.0),
    })
}

fn hyperbola_relation() -> Result<ImplicitRelation> {
    Ok(ImplicitRelation {
        rel: fn2_from_expr(&parse("a*b - 1")?, ["a", "b"])?,
        a_domain: Interval::new(0.1, 10.0),
        b_domain: Interval::new(0.0, 11.0),
    })
}

/// Look up an entry by name.
pub fn get(name: &str) -> Result<CatalogEntry> {
    get_with(name, DEFAULT_GENERATOR)
}

/// As [`get`], with the generator `H(w)` used by `euler_generator`.
pub fn get_with(name: &str, generator: &str) -> Result<CatalogEntry> {
    match name {
        "parabola_family" => Ok(CatalogEntry {
            name: "parabola_family",
            family: Family::Curves(CurveFamily(fn3_from_expr(&parse("y - (x + a)^2")?, ["x", "y", "a"])?)),
            constraint: None,
            expected: None,
            explicit: Vec::new(),
            notes: "Parabolas y = (x + c)^2 (c is the parameter a); the singular integral is the line y = 0.",
        }),
        "hyperbola_envelope" => Ok(CatalogEntry {
            name: "hyperbola_envelope",
            family: Family::Curves(CurveFamily(fn3_from_expr(&parse("a^2*x + y - a")?, ["x", "y", "a"])?)),
            constraint: Some(ConstraintCurve::ImplicitRelation(hyperbola_relation()?)),
            expected: Some(implicit("z^2 - 4*x*y")?),
            explicit: Vec::new(),
            notes: "Lines a^2 x + y - a = 0 envelope the hyperbola 4xy = 1. The same curve is the z = 1 \
                    cross-section of the envelope of the planes z = ax + by with ab = 1, which is z^2 = 4xy.",
        }),
        "goursat_quartic" => Ok(CatalogEntry {
            name: "goursat_quartic",
            family: Family::Curves(CurveFamily(fn3_from_expr(&parse("y^4 - y^2 - (x - a)^2")?, ["x", "y", "a"])?)),
            constraint: None,
            expected: None,
            explicit: Vec::new(),
            notes: "Translates of y^4 - y^2 = x^2. The condition df/da = 0 picks out y = 0 and y = +-1; the curves \
                    are singular along y = 0, which is a locus of singular points, while y = +-1 is a true envelope.",
        }),
        "sqrt_xy" => plane_entry(
            "sqrt_xy",
            Some(ConstraintCurve::FunctionOfA(reciprocal()?)),
            Some("z^2 - 4*x*y"),
            &[("sqrt(x*y)", quadrant()), ("2*sqrt(x*y)", quadrant())],
            "b = 1/a; the envelope is z = 2 sqrt(xy).",
        ),
        "power_alpha" => plane_entry(
            "power_alpha",
            None,
            None,
            &POWER_ALPHAS.map(|al| (power_expr(al), quadrant())).iter().map(|(e, d)| (e.as_str(), *d)).collect::<Vec<_>>(),
            "z = x^alpha y^(1 - alpha) for alpha in {0.3, 0.5, 0.9}; each is rebuilt from its tangent planes \
             (a, b) = grad z.",
        ),
        "euler_generator" => plane_entry(
            "euler_generator",
            None,
            None,
            &[(euler_generator_expr(generator)?.as_str(), quadrant())],
            "z = sqrt(xy) H(x/y); the default generator is H(w) = 2 + sin(w).",
        ),
        "bimodal_spline" => plane_entry(
            "bimodal_spline",
            Some(ConstraintCurve::FunctionOfA(bimodal())),
            None,
            &[],
            "phi' is a bimodal spline of four polynomial pieces on [0, 4] and zero elsewhere; phi is its \
             integral with phi(0) = 0. Since phi' is not invertible, rays through the origin meet the envelope \
             more than once. The integration constant is our choice; the cross-section is reproduced \
             qualitatively.",
        ),
        "circle_relation" => plane_entry(
            "circle_relation",
            Some(ConstraintCurve::ImplicitRelation(circle()?)),
            Some("z^2 - 2*x*z - 2*y*z + 2*x*y"),
            &[],
            "(a - 1)^2 + (b - 1)^2 = 1 splits into the sheets b = 1 +- sqrt(1 - (a - 1)^2); together their \
             envelopes give z^2 = 2xz + 2yz - 2xy.",
        ),
        "tilted_cone" => plane_entry(
            "tilted_cone",
            Some(ConstraintCurve::ParametricCurve(cone_constraint(1.0))),
            Some("x^2 + y^2 + z^2 - 2*x*z - 2*y*z"),
            &[("x + y + sqrt(2*x*y)", quadrant()), ("x + y - sqrt(2*x*y)", quadrant())],
            "Erratum: the tangent planes of the cone (x - z)^2 + (y - z)^2 = z^2 are \
             a = cos t / (1 + cos t + sin t), b = sin t / (1 + cos t + sin t). The negated values are not \
             tangent: at t = 0 they give the plane z = -x/2, while the cone's tangent plane \
             along (2, 1, 1) is z = x/2. A negative check pins this. t = pi and t = -pi/2 are excluded.",
        ),
        "chojnacki_cusp" => plane_entry(
            "chojnacki_cusp",
            Some(ConstraintCurve::InverseMap(chojnacki_map())),
            Some("z*y^2 - x^3"),
            &[("x^3/y^2", rect((-1.0, 1.0), (0.5, 2.0)))],
            "(a, b) = (3x^2/y^2, -2x^3/y^3) rebuilds z = x^3/y^2; along y = 1 the map is (3t^2, -2t^3), which has \
             a cusp at t = 0.",
        ),
        "neg_quadratic" => plane_entry(
            "neg_quadratic",
            Some(ConstraintCurve::FunctionOfA(neg_quadratic()?)),
            Some("2*y*z - x^2"),
            &[("x^2/(2*y)", quadrant())],
            "b = -a^2/2 has invertible phi' = -a; the envelope z = x^2/(2y) is homogeneous of degree one.",
        ),
        other => Err(Error::UnknownEntry(other.to_string())),
    }
}

fn power_expr(alpha: f64) -> String {
    format!("x^{alpha:?}*y^{:?}", 1.0 - alpha)
}

/// Run an entry's full check battery.
pub fn run(name: &str, cfg: &ToleranceConfig) -> Result<EntryReport> {
    run_with(name, DEFAULT_GENERATOR, cfg)
}

/// As [`run`], with the generator `H(w)` used by `euler_generator`.
pub fn run_with(name: &str, generator: &str, cfg: &ToleranceConfig) -> Result<EntryReport> {
    let entry = get_with(name, generator)?;
    let mut b = Battery::new();
    match name {
        "parabola_family" => run_parabola(&entry, &mut b, cfg)?,
        "hyperbola_envelope" => run_hyperbola(&entry, &mut b, cfg)?,
        "goursat_quartic" => run_goursat(&entry, &mut b, cfg)?,
        "sqrt_xy" => run_sqrt_xy(&entry, &mut b, cfg)?,
        "power_alpha" => run_power_alpha(&entry, &mut b, cfg)?,
        "euler_generator" => run_euler_generator(&entry, &mut b, cfg)?,
        "bimodal_spline" => run_bimodal(&entry, &mut b, cfg)?,
        "circle_relation" => run_circle(&entry, &mut b, cfg)?,
        "tilted_cone" => run_cone(&entry, &mut b, cfg)?,
        "chojnacki_cusp" => run_chojnacki(&entry, &mut b, cfg)?,
        "neg_quadratic" => run_neg_quadratic(&entry, &mut b, cfg)?,
        _ => unreachable!("get_with accepted an unknown name"),
    }
    Ok(b.finish(&entry))
}

/// Run every entry, in name order.
pub fn run_all(cfg: &ToleranceConfig) -> Result<Vec<EntryReport>> {
    NAMES.iter().map(|n| run(n, cfg)).collect()
}

fn curve_family(entry: &CatalogEntry) -> &Fn3 {
    match &entry.family {
        Family::Curves(CurveFamily(f)) => f,
        Family::Planes(_) => unreachable!("entry {} is a plane family", entry.name),
    }
}

fn plane_family(entry: &CatalogEntry) -> &PlaneFamily {
    match &entry.family {
        Family::Planes(p) => p,
        Family::Curves(_) => unreachable!("entry {} is a curve family", entry.name),
    }
}

/// Evenly strided indices selecting at most `n` of `len` items.
fn strided(len: usize, n: usize) -> Vec<usize> {
    let n = n.min(len);
    (0..n).map(|i| i * len / n).collect()
}

/// Largest membership residuals of `s·p` over a strided selection of
/// accepted points, each at its own parameter.
fn scaling_closure(
    name: &str,
    fam: &PlaneFamily,
    surface: &SampledSurface,
    coupling: &dyn Fn(f64) -> Result<(f64, f64)>,
    cfg: &ToleranceConfig,
) -> Result<Check> {
    let accepted: Vec<&EnvelopePoint> = surface.accepted().collect();
    let picks = strided(accepted.len(), CLOSURE_SAMPLES);
    let (mut worst_f, mut worst_s): (f64, f64) = (0.0, 0.0);
    for i in &picks {
        let pt = accepted[*i];
        for s in CLOSURE_SCALES {
            let q = pt.p.map(|v| s * v);
            let (f, st) = fam.membership(coupling, q, pt.param, cfg)?;
            worst_f = worst_f.max(f);
            worst_s = worst_s.max(st);
        }
    }
    let passed = !picks.is_empty() && worst_f <= cfg.residual_tol && worst_s <= STATIONARITY_TOL;
    Ok(Check {
        name: format!("scaling_closure_{name}"),
        passed,
        value: worst_s,
        tolerance: STATIONARITY_TOL,
        detail: format!("{} points x scales {:?}; max |f| = {worst_f:e}", picks.len(), CLOSURE_SCALES),
    })
}

fn membership_check(name: &str, expected: &ImplicitLevelSetNamed, cloud: &[[f64; 3]], tol: f64) -> Check {
    let r = implicit_membership(&expected.surface, cloud);
    let passed = r.n_evaluated > 0 && r.n_skipped == 0 && r.max_abs <= tol;
    Check {
        name: name.to_string(),
        passed,
        value: r.max_abs,
        tolerance: tol,
        detail: format!("{} = 0 over {} points", expected.expr, r.n_evaluated),
    }
}

fn explicit_residual_checks(entry: &CatalogEntry, b: &mut Battery, cfg: &ToleranceConfig) {
    for (expr, g) in &entry.explicit {
        let grid = g.graph.domain.interior_grid(20);
        let r = clairaut_report_explicit(&g.graph, &grid, None, cfg);
        let passed = r.n_skipped == 0 && r.max_abs <= 1e-7;
        b.push(Check {
            name: format!("clairaut_residual[{expr}]"),
            passed,
            value: r.max_abs,
            tolerance: 1e-7,
            detail: format!("20x20 interior grid, {} skipped", r.n_skipped),
        });
    }
}

fn homogeneity_checks(entry: &CatalogEntry, b: &mut Battery) -> Result<()> {
    for (expr, g) in &entry.explicit {
        let r = homogeneity_check(&g.graph, 1.0, 10, &[0.5, 2.0, 3.0])?;
        b.push(Check::at_most(format!("homogeneity_n1[{expr}]"), r.max_rel_error, 1e-12));
    }
    Ok(())
}

fn witness_check(name: &str, points: &[Point2], expect: bool) -> Check {
    let inside = windowed(points);
    let w = detect_multivalued(&inside, 1e-3, DEFAULT_RADIUS_SEP);
    let detail = match &w {
        Some(w) => format!("witness {:?} and {:?}, radius ratio {:.6}", w.p, w.q, w.radius_ratio),
        None => format!("no witness among {} points in the window", inside.len()),
    };
    Check::holds(name, w.is_some() == expect, detail)
}

fn curve_cloud(f: &Fn3, pts: &[crate::envelope::CurveEnvelopePoint], cfg: &ToleranceConfig) -> Result<SampledSurface> {
    let mut points = Vec::with_capacity(pts.len());
    for p in pts {
        let fr = f(p.x, p.y, p.a)?.abs();
        let sr = crate::numerics::diff_central(|t| f(p.x, p.y, t), p.a, cfg)?.abs();
        points.push(EnvelopePoint {
            p: [p.x, p.y, 0.0],
            param: p.a,
            family_residual: fr,
            stationarity_residual: sr,
            accepted: fr <= cfg.residual_tol && sr <= STATIONARITY_TOL,
        });
    }
    Ok(SampledSurface { points, source: "curve family f(x, y, a) = 0".into(), diagnostics: Default::default() })
}

fn run_parabola(entry: &CatalogEntry, b: &mut Battery, cfg: &ToleranceConfig) -> Result<()> {
    let f = curve_family(entry);
    let xs = linspace(-2.0, 2.0, 41);
    let (pts, diag) = envelope_curve_family(f, &xs, Interval::new(-3.0, 3.0), Interval::new(-1.0, 30.0), cfg)?;
    b.push(Check::holds("one_envelope_point_per_x", pts.len() == xs.len() && diag.skipped.is_empty(), format!("{} points", pts.len())));
    let worst = pts.iter().map(|p| p.y.abs()).fold(0.0, f64::max);
    b.push(Check::at_most("envelope_is_y_equals_0", worst, 1e-8));
    let cands: Vec<(Point2, f64)> = pts.iter().map(|p| ([p.x, p.y], p.a)).collect();
    let labels = classify_locus(f, &cands, cfg)?;
    let bad = labels.iter().filter(|c| c.label != Label::Envelope).count();
    b.push(Check::holds("labels_envelope", bad == 0, format!("{bad} of {} not Envelope", labels.len())));
    b.classified = labels;
    b.cloud("envelope", curve_cloud(f, &pts, cfg)?);
    Ok(())
}

fn run_hyperbola(entry: &CatalogEntry, b: &mut Battery, cfg: &ToleranceConfig) -> Result<()> {
    let f = curve_family(entry);
    let xs = linspace(0.1, 10.0, 64);
    let (pts, _) = envelope_curve_family(f, &xs, Interval::new(0.01, 10.0), Interval::new(-1e4, 1e4), cfg)?;
    let worst = pts.iter().map(|p| (4.0 * p.x * p.y - 1.0).abs()).fold(f64::NAN, f64::max);
    b.push(Check::at_most("curve_envelope_4xy_eq_1", worst, 1e-8).with_detail(format!("{} points", pts.len())));
    let (spot, _) = envelope_curve_family(f, &[0.5], Interval::new(0.01, 10.0), Interval::new(-1e4, 1e4), cfg)?;
    let y = spot.first().map_or(f64::NAN, |p| p.y);
    b.push(Check::at_most("spot_x_0.5_gives_y_0.5", (y - 0.5).abs(), 1e-10));

    let g: Fn2 = Arc::new(|x, a| Ok(a - a * a * x));
    let a_grid = linspace(0.0, 10.0, 200_001);
    let mut brute: f64 = 0.0;
    for &x in &xs {
        brute = brute.max((brute_force_upper_envelope(&g, x, &a_grid)? - 1.0 / (4.0 * x)).abs());
    }
    b.push(Check::at_most("brute_force_max_over_a", brute, 1e-4));

    let Some(ConstraintCurve::ImplicitRelation(rel)) = &entry.constraint else { unreachable!() };
    let branches = enumerate_branches(rel, 64)?;
    b.push(Check::holds("one_branch", branches.len() == 1, format!("{} branches", branches.len())));
    let br = &branches[0];
    let fam = PlaneFamily::origin();
    let grid: Vec<Point2> = xs.iter().map(|&x| [x, 1.0]).collect();
    let s = envelope_branch(&fam, br, &grid, cfg)?;
    let (section, dropped) = cross_section_z1(&s, CROSS_SECTION_EPS)?;
    let hyper = section.iter().map(|p| (4.0 * p[0] * p[1] - 1.0).abs()).fold(0.0, f64::max);
    b.push(
        Check::at_most("branch_cross_section_4XY_eq_1", hyper, 1e-8)
            .with_detail(format!("{} accepted of {}, {dropped} dropped", s.accepted().count(), grid.len())),
    );
    b.push(Check::holds("all_grid_points_accepted", s.accepted().count() == grid.len(), ""));
    let agree = section.iter().map(|p| (p[1] - 1.0 / (4.0 * p[0])).abs()).fold(0.0, f64::max);
    b.push(Check::at_most("branch_matches_y_eq_1_over_4x", agree, 1e-8));
    if let Some(e) = &entry.expected {
        b.push(membership_check("expected_surface_membership", e, &s.cloud(), 1e-8));
    }
    b.push(scaling_closure("branch", &fam, &s, &|t| Ok((t, br.psi(t)?)), cfg)?);
    b.cloud("branch_envelope", s);
    b.cloud("curve_envelope", curve_cloud(f, &pts, cfg)?);
    Ok(())
}

fn run_goursat(entry: &CatalogEntry, b: &mut Battery, cfg: &ToleranceConfig) -> Result<()> {
    let f = curve_family(entry);
    let a_vals = linspace(-2.0, 2.0, 100);
    let mut cands = Vec::new();
    for &a in &a_vals {
        cands.push(([a, 0.0], a));
    }
    for (i, &a) in a_vals.iter().enumerate() {
        cands.push(([a, if i % 2 == 0 { 1.0 } else { -1.0 }], a));
    }
    let labels = classify_locus(f, &cands, cfg)?;
    let mis = labels
        .iter()
        .filter(|c| {
            let want = if c.p[1] == 0.0 { Label::SingularLocus } else { Label::Envelope };
            c.label != want
        })
        .count();
    b.push(Check::holds("zero_misclassifications", mis == 0, format!("{mis} of {} misclassified", labels.len())));
    let cloud = SampledSurface {
        points: labels
            .iter()
            .map(|c| EnvelopePoint {
                p: [c.p[0], c.p[1], 0.0],
                param: c.param,
                family_residual: 0.0,
                stationarity_residual: 0.0,
                accepted: true,
            })
            .collect(),
        source: "envelope candidates".into(),
        diagnostics: Default::default(),
    };
    b.classified = labels;
    b.cloud("candidates", cloud);
    Ok(())
}

fn run_sqrt_xy(entry: &CatalogEntry, b: &mut Battery, cfg: &ToleranceConfig) -> Result<()> {
    let fam = plane_family(entry);
    let Some(ConstraintCurve::FunctionOfA(c)) = &entry.constraint else { unreachable!() };
    let a_grid = linspace(0.5, 2.0, 32);
    let y_grid = linspace(0.125, 4.0, 32);
    let s = envelope_function_constraint(fam, c, &a_grid, &y_grid, cfg)?;
    let worst = s.accepted().map(|p| (p.p[2] - 2.0 * (p.p[0] * p.p[1]).sqrt()).abs()).fold(0.0, f64::max);
    b.push(Check::at_most("z_eq_2_sqrt_xy", worst, 1e-8).with_detail(format!("{} accepted of {}", s.accepted().count(), s.points.len())));
    b.push(Check::holds("all_points_accepted", s.accepted().count() == a_grid.len() * y_grid.len(), ""));
    let spot = s
        .points
        .iter()
        .filter(|p| p.param == 2.0 && p.p[1] == 4.0)
        .map(|p| (p.p[0] - 1.0).abs().max((p.p[2] - 4.0).abs()))
        .fold(f64::NAN, f64::max);
    b.push(Check::at_most("point_1_4_4_at_a_2_y_4", spot, 1e-12));
    if let Some(e) = &entry.expected {
        b.push(membership_check("expected_surface_membership", e, &s.cloud(), 1e-8));
    }
    let proj = projective_curve(c, &a_grid, cfg)?;
    let pw = proj.iter().map(|p| (p[1] * p[1] - 4.0 * p[0]).abs()).fold(0.0, f64::max);
    b.push(Check::at_most("projective_Z2_eq_4X", pw, 1e-10));

    let env = ExplicitGraph::new(explicit_envelope(c, cfg), rect((0.5, 2.0), (0.5, 2.0)));
    let tang = tangency_check(&Surface::ExplicitGraph(env.clone()), 2.0, 0.5, [1.0, 4.0, 4.0], cfg);
    let two_sqrt = &entry.explicit[1].1.graph;
    let t = tangency_check(&Surface::ExplicitGraph(two_sqrt.clone()), 2.0, 0.5, [1.0, 4.0, 4.0], cfg)?;
    b.push(Check::holds("tangent_at_1_4_4", t.tangent, format!("angle {:e}", t.angle)));
    drop(tang);
    let h = homogeneity_check(&env, 1.0, 8, &[0.5, 2.0, 3.0])?;
    b.push(Check::at_most("explicit_envelope_homogeneous", h.max_rel_error, 1e-9));
    let dphi: Fn1 = {
        let (c, cfg) = (c.clone(), *cfg);
        Arc::new(move |a| c.derivative(a, &cfg))
    };
    let inv = invertibility_check(&dphi, c.domain, 200)?;
    b.push(Check::holds("phi_prime_invertible", inv, ""));
    let (section, _) = cross_section_z1(&s, CROSS_SECTION_EPS)?;
    b.push(witness_check("no_multivalued_witness", &section, false));
    explicit_residual_checks(entry, b, cfg);
    homogeneity_checks(entry, b)?;
    b.push(scaling_closure("envelope", fam, &s, &|t| Ok((t, c.phi(t)?)), cfg)?);
    b.cloud("envelope", s);
    Ok(())
}

fn run_power_alpha(entry: &CatalogEntry, b: &mut Battery, cfg: &ToleranceConfig) -> Result<()> {
    let fam = plane_family(entry);
    explicit_residual_checks(entry, b, cfg);
    homogeneity_checks(entry, b)?;
    for (alpha, (expr, g)) in POWER_ALPHAS.iter().zip(&entry.explicit) {
        let e = euler_residual(&g.graph, 1.0, [1.0, 1.0], cfg)?;
        b.push(Check::at_most(format!("euler_residual_n1[{expr}]"), e.abs(), 1e-7));
        rebuild_from_gradient(&format!("alpha_{alpha}"), expr, &g.graph, fam, b, cfg)?;
    }
    Ok(())
}

/// Rebuild `h` from its tangent planes `(a, b) = ∇h` and compare.
fn rebuild_from_gradient(
    tag: &str,
    expr: &str,
    g: &ExplicitGraph,
    fam: &PlaneFamily,
    b: &mut Battery,
    cfg: &ToleranceConfig,
) -> Result<()> {
    let m = gradient_map(expr, g.domain)?;
    let grid = g.domain.interior_grid(20);
    let s = envelope_inverse_map(fam, &m, &grid, cfg)?;
    let mut worst: f64 = 0.0;
    for p in &s.points {
        worst = worst.max((p.p[2] - (g.h)(p.p[0], p.p[1])?).abs());
    }
    b.push(Check::at_most(format!("rebuilt_from_tangent_planes[{expr}]"), worst, 1e-10));
    b.push(Check::holds(format!("all_points_accepted[{expr}]"), s.accepted().count() == grid.len(), ""));
    b.push(scaling_closure(tag, fam, &s, &|t| m.eval(t, 1.0), cfg)?);
    b.cloud(tag, s);
    Ok(())
}

fn run_euler_generator(entry: &CatalogEntry, b: &mut Battery, cfg: &ToleranceConfig) -> Result<()> {
    let fam = plane_family(entry);
    explicit_residual_checks(entry, b, cfg);
    homogeneity_checks(entry, b)?;
    let (expr, g) = &entry.explicit[0];
    rebuild_from_gradient("rebuilt", expr, &g.graph, fam, b, cfg)
}

fn run_bimodal(entry: &CatalogEntry, b: &mut Battery, cfg: &ToleranceConfig) -> Result<()> {
    let fam = plane_family(entry);
    let Some(ConstraintCurve::FunctionOfA(c)) = &entry.constraint else { unreachable!() };
    let total = integrate(|a| Ok(spline_phi_prime(a)), 0.0, 4.0, cfg)?;
    b.push(Check::at_most("integral_0_4_eq_2.6", (total - 2.6).abs(), 1e-6).with_detail(format!("{} panels, value {total}", cfg.quad_panels)));
    let knots = [(1.0, 1.0), (2.0, 0.5), (3.0, 1.0)];
    for (i, (k, want)) in knots.iter().enumerate() {
        let (l, r) = (SPLINE_PIECES[i](*k), SPLINE_PIECES[i + 1](*k));
        b.push(Check::holds(format!("knot_{k}_value_{want}"), l == *want && r == *want, format!("left {l}, right {r}")));
    }
    let dphi: Fn1 = Arc::new(|a| Ok(spline_phi_prime(a)));
    b.push(Check::holds("phi_prime_not_invertible", !invertibility_check(&dphi, c.domain, 401)?, ""));
    let mismatch = c.check_derivative(64, cfg);
    b.push(Check::holds("phi_prime_matches_quadrature", mismatch.is_ok(), format!("{mismatch:?}")));
    let a_grid = linspace(0.0, 4.0, 4001);
    let s = envelope_function_constraint(fam, c, &a_grid, &[1.0], cfg)?;
    b.push(Check::holds("all_points_accepted", s.accepted().count() == a_grid.len(), format!("{} accepted", s.accepted().count())));
    let (section, dropped) = cross_section_z1(&s, CROSS_SECTION_EPS)?;
    let w = witness_check("multivalued_witness", &section, true);
    let detail = format!("{}; {dropped} points with z = 0 dropped", w.detail);
    b.push(w.with_detail(detail));
    b.push(scaling_closure("envelope", fam, &s, &|t| Ok((t, c.phi(t)?)), cfg)?);
    b.cloud("envelope", s);
    Ok(())
}

fn run_circle(entry: &CatalogEntry, b: &mut Battery, cfg: &ToleranceConfig) -> Result<()> {
    let fam = plane_family(entry);
    let Some(ConstraintCurve::ImplicitRelation(rel)) = &entry.constraint else { unreachable!() };
    let expected = entry.expected.as_ref().expect("circle entry has a target surface");
    let branches = enumerate_branches(rel, 64)?;
    b.push(Check::holds("two_branches", branches.len() == 2, format!("{} branches", branches.len())));
    let grid = rect((-3.0, 3.0), (0.0, 3.0)).interior_grid(16);
    for (i, br) in branches.iter().enumerate() {
        let name = if br.psi(1.0)? > 1.0 { "upper" } else { "lower" };
        let mut worst: f64 = 0.0;
        for a in br.a_interval.linspace(1000) {
            worst = worst.max((rel.rel)(a, br.psi(a)?)?.abs());
        }
        b.push(Check::at_most(format!("branch_residual_{name}"), worst, 1e-8));
        let s = envelope_branch(fam, br, &grid, cfg)?;
        b.push(membership_check(&format!("quadric_membership_{name}"), expected, &s.cloud(), 1e-8));
        let r = clairaut_report_implicit(&expected.surface, &s.cloud(), cfg)?;
        b.push(Check::at_most(format!("implicit_clairaut_residual_{name}"), r.max_abs, 1e-7).with_detail(format!(
            "{} evaluated, {} skipped near vertical tangents",
            r.n_evaluated, r.n_skipped
        )));
        b.push(scaling_closure(name, fam, &s, &|t| Ok((t, br.psi(t)?)), cfg)?);
        if name == "upper" {
            let spot = envelope_branch(fam, br, &[[3.0, 4.0], [1.0, 0.0]], cfg)?;
            let z: Vec<f64> = spot.points.iter().map(|p| p.p[2]).collect();
            b.push(Check::at_most("spot_3_4_gives_z_12", z.first().map_or(f64::NAN, |z| (z - 12.0).abs()), 1e-10));
            b.push(Check::at_most("spot_1_0_gives_z_2", z.get(1).map_or(f64::NAN, |z| (z - 2.0).abs()), 1e-9));
        }
        let _ = i;
        b.cloud(&format!("branch_{name}"), s);
    }
    Ok(())
}

fn run_cone(entry: &CatalogEntry, b: &mut Battery, cfg: &ToleranceConfig) -> Result<()> {
    let fam = plane_family(entry);
    let Some(ConstraintCurve::ParametricCurve(c)) = &entry.constraint else { unreachable!() };
    let expected = entry.expected.as_ref().expect("cone entry has a target surface");
    let thetas: Vec<f64> = (0..64).map(|i| -PI + (i as f64 + 0.5) * 2.0 * PI / 64.0).collect();
    let s = envelope_parametric_planes(fam, c, &thetas, &DEFAULT_S_GRID, cfg)?;
    b.push(membership_check("quadric_membership", expected, &s.cloud(), 1e-8));
    b.push(Check::holds(
        "all_points_accepted",
        s.accepted().count() == thetas.len() * DEFAULT_S_GRID.len(),
        format!("{} accepted of {}", s.accepted().count(), s.points.len()),
    ));
    let r = clairaut_report_implicit(&expected.surface, &s.cloud(), cfg)?;
    b.push(Check::at_most("implicit_clairaut_residual", r.max_abs, 1e-7).with_detail(format!(
        "{} evaluated, {} skipped near vertical tangents",
        r.n_evaluated, r.n_skipped
    )));

    let cone = Surface::ImplicitLevelSet(expected.surface.clone());
    let mut tangent = 0;
    let sampled: Vec<f64> = (0..32).map(|i| -PI + (i as f64 + 0.5) * 2.0 * PI / 32.0).collect();
    let mut worst_angle: f64 = 0.0;
    for &t in &sampled {
        let d = characteristic_direction(c, t, cfg)?;
        let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let (a, bb) = c.eval(t)?;
        let rep = tangency_check(&cone, a, bb, d.map(|v| v / n), cfg)?;
        worst_angle = worst_angle.max(rep.angle);
        tangent += rep.tangent as usize;
    }
    b.push(Check::holds("tangent_at_32_theta", tangent == sampled.len(), format!("{tangent} of 32, max angle {worst_angle:e}")));

    // the negated signs must fail at θ = 0
    let negated = cone_constraint(-1.0);
    let (pa, pb) = negated.eval(0.0)?;
    let d = characteristic_direction(&negated, 0.0, cfg)?;
    let own = tangency_check(&cone, pa, pb, d.map(|v| v / d[2]), cfg)?;
    let at_true = tangency_check(&cone, pa, pb, [2.0, 1.0, 1.0], cfg)?;
    b.push(Check::holds(
        "negated_signs_fail_tangency",
        !own.tangent && !at_true.tangent,
        format!("(a, b) = ({pa}, {pb}); own point {:?} on cone residual {:e}", d.map(|v| v / d[2]), own.surface_residual),
    ));

    explicit_residual_checks(entry, b, cfg);
    homogeneity_checks(entry, b)?;
    let mut gap: f64 = 0.0;
    for (_, g) in &entry.explicit {
        for p in g.graph.domain.interior_grid(10) {
            let z = (g.graph.h)(p[0], p[1])?;
            let e = crate::verify::clairaut_residual_explicit(&g.graph, p, None, cfg)?;
            match crate::verify::clairaut_residual_implicit(&expected.surface, [p[0], p[1], z], cfg) {
                Ok(i) => gap = gap.max((e - i).abs()),
                Err(Error::VerticalTangent { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    b.push(Check::at_most("explicit_implicit_agree", gap, 1e-6));

    let (section, _) = cross_section_z1(&s, CROSS_SECTION_EPS)?;
    let circle = section.iter().map(|p| ((p[0] - 1.0).powi(2) + (p[1] - 1.0).powi(2) - 1.0).abs()).fold(0.0, f64::max);
    b.push(Check::at_most("cross_section_is_unit_circle_about_1_1", circle, 1e-8));
    let ring: Vec<Point2> = linspace(-PI, PI, 2001)
        .into_iter()
        .filter_map(|t| {
            let d = characteristic_direction(c, t, cfg).ok()?;
            Some([d[0] / d[2], d[1] / d[2]])
        })
        .collect();
    b.push(witness_check("multivalued_witness", &ring, true));
    b.push(scaling_closure("envelope", fam, &s, &|t| c.eval(t), cfg)?);
    b.cloud("envelope", s);
    Ok(())
}

fn run_chojnacki(entry: &CatalogEntry, b: &mut Battery, cfg: &ToleranceConfig) -> Result<()> {
    let fam = plane_family(entry);
    let Some(ConstraintCurve::InverseMap(m)) = &entry.constraint else { unreachable!() };
    let mut grid = Vec::new();
    for x in linspace(-1.0, 1.0, 41) {
        for y in linspace(0.5, 2.0, 31) {
            grid.push([x, y]);
        }
    }
    let s = envelope_inverse_map(fam, m, &grid, cfg)?;
    let worst = s.points.iter().map(|p| (p.p[2] - p.p[0].powi(3) / (p.p[1] * p.p[1])).abs()).fold(0.0, f64::max);
    b.push(Check::at_most("reconstruction_x3_over_y2", worst, 1e-10).with_detail(format!("{} grid points", grid.len())));
    if let Some(e) = &entry.expected {
        b.push(membership_check("expected_surface_membership", e, &s.cloud(), 1e-8));
    }
    let g: CurveFn = Arc::new(|t| Ok([3.0 * t * t, -2.0 * t * t * t]));
    let at0 = detect_cusp(&g, 0.0, cfg)?;
    b.push(Check::holds("cusp_at_t_0", at0.cusp, format!("speed {:e}, window max {:e}", at0.speed, at0.window_max)));
    let mut false_alarms = 0;
    let offs: Vec<f64> = (1..=20)
        .map(|k| {
            let u = (k as f64 * 0.618_033_988_749_894_9).fract();
            let t = 0.1 + 2.9 * u;
            if k % 2 == 0 {
                t
            } else {
                -t
            }
        })
        .collect();
    for &t in &offs {
        false_alarms += detect_cusp(&g, t, cfg)?.cusp as usize;
    }
    b.push(Check::holds("no_cusp_away_from_0", false_alarms == 0, format!("{false_alarms} of {} flagged", offs.len())));
    b.classified.push(classify_curve_point(&g, 0.0, cfg)?);
    explicit_residual_checks(entry, b, cfg);
    homogeneity_checks(entry, b)?;
    b.push(scaling_closure("envelope", fam, &s, &|t| m.eval(t, 1.0), cfg)?);
    b.cloud("envelope", s);
    Ok(())
}

fn run_neg_quadratic(entry: &CatalogEntry, b: &mut Battery, cfg: &ToleranceConfig) -> Result<()> {
    let fam = plane_family(entry);
    let Some(ConstraintCurve::FunctionOfA(c)) = &entry.constraint else { unreachable!() };
    let a_grid = linspace(-2.0, 2.0, 32);
    let y_grid = linspace(0.25, 4.0, 32);
    let s = envelope_function_constraint(fam, c, &a_grid, &y_grid, cfg)?;
    let worst = s
        .accepted()
        .map(|p| (p.p[2] - p.p[0] * p.p[0] / (2.0 * p.p[1])).abs() / (1.0 + p.p[2].abs()))
        .fold(0.0, f64::max);
    b.push(Check::at_most("z_eq_x2_over_2y", worst, 1e-12));
    if let Some(e) = &entry.expected {
        b.push(membership_check("expected_surface_membership", e, &s.cloud(), 1e-8));
    }
    let env = ExplicitGraph::new(explicit_envelope(c, cfg), rect((0.5, 2.0), (0.5, 2.0)));
    let h = homogeneity_check(&env, 1.0, 8, &[0.5, 2.0, 3.0])?;
    b.push(Check::at_most("explicit_envelope_homogeneous", h.max_rel_error, 1e-9));
    let dphi = c.phi_prime.clone().expect("exact derivative");
    b.push(Check::holds("phi_prime_invertible", invertibility_check(&dphi, c.domain, 200)?, ""));
    let (section, _) = cross_section_z1(&s, CROSS_SECTION_EPS)?;
    b.push(witness_check("no_multivalued_witness", &section, false));
    explicit_residual_checks(entry, b, cfg);
    homogeneity_checks(entry, b)?;
    b.push(scaling_closure("envelope", fam, &s, &|t| Ok((t, c.phi(t)?)), cfg)?);
    b.cloud("envelope", s);
    Ok(())
}

/// Generator expressions are plain text, so `fn1_from_expr` is exposed for
/// callers that want `H` itself.
pub fn generator_fn(h_of_w: &str) -> Result<Fn1> {
    fn1_from_expr(&parse(h_of_w)?, "w")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_sorted_and_resolvable() {
        let mut sorted = NAMES.to_vec();
        sorted.sort();
        assert_eq!(sorted, NAMES.to_vec());
        for n in NAMES {
            assert_eq!(get(n).unwrap().name, n);
        }
        assert!(matches!(get("nope"), Err(Error::UnknownEntry(_))));
    }

    #[test]
    fn spline_knots_and_integral() {
        for (i, (k, v)) in [(1.0, 1.0), (2.0, 0.5), (3.0, 1.0)].into_iter().enumerate() {
            assert_eq!(SPLINE_PIECES[i](k), v);
            assert_eq!(SPLINE_PIECES[i + 1](k), v);
        }
        assert_eq!(spline_phi_prime(-0.5), 0.0);
        assert_eq!(spline_phi_prime(4.5), 0.0);
        // piecewise antiderivatives: 8/15, 23/30, 23/30, 8/15
        let cfg = ToleranceConfig::default();
        let v = integrate(|a| Ok(spline_phi_prime(a)), 0.0, 4.0, &cfg).unwrap();
        assert!((v - 2.6).abs() < 1e-7);
        let phi = bimodal();
        assert!((phi.phi(4.0).unwrap() - 2.6).abs() < 1e-7);
        assert!((phi.phi(1.0).unwrap() - 8.0 / 15.0).abs() < 1e-7);
    }

    #[test]
    fn generator_substitution() {
        assert_eq!(euler_generator_expr("w^2").unwrap(), "sqrt(x*y)*(((x/y) ^ 2))");
        assert!(euler_generator_expr("w + q").is_err());
        assert_eq!(generator_fn("2*w").unwrap()(1.5).unwrap(), 3.0);
    }

    #[test]
    fn every_entry_passes() {
        let cfg = ToleranceConfig::default();
        for r in run_all(&cfg).unwrap() {
            let failed: Vec<_> = r.checks.iter().filter(|c| !c.passed).collect();
            assert!(r.passed, "{}: {failed:#?}", r.name);
            assert!(!r.checks.is_empty());
        }
    }
}

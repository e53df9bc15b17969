//! The complete integral `z = a·x + b·y (+ k(a, b))` and the ways `a` and
//! `b` can be coupled to produce a one-parameter family of planes.

use std::fmt;
use std::sync::Arc;

use crate::exprlang::Expr;
use crate::numerics::{
    derivative_from_expr, diff_central, find_root, fn1_from_expr, linspace, CurveFn, Fn1, Fn2, Interval,
    MapFn, Rect, ToleranceConfig,
};
use crate::{Error, Point3, Result};

/// Planes `z = a·x + b·y + k(a, b)`; without a tilt `k`, every member
/// passes through the origin.
#[derive(Clone, Default)]
pub struct PlaneFamily {
    pub tilt: Option<Fn2>,
}

impl fmt::Debug for PlaneFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlaneFamily").field("tilt", &self.tilt.as_ref().map(|_| "k(a, b)")).finish()
    }
}

/// One member plane `z = a·x + b·y + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub a: f64,
    pub b: f64,
    pub offset: f64,
}

impl Plane {
    pub fn z_at(&self, x: f64, y: f64) -> f64 {
        self.a * x + self.b * y + self.offset
    }
}

impl PlaneFamily {
    /// The family `z = a·x + b·y` of planes through the origin.
    pub fn origin() -> Self {
        PlaneFamily { tilt: None }
    }

    pub fn with_tilt(k: Fn2) -> Self {
        PlaneFamily { tilt: Some(k) }
    }

    pub fn is_origin(&self) -> bool {
        self.tilt.is_none()
    }

    fn offset(&self, a: f64, b: f64) -> Result<f64> {
        match &self.tilt {
            Some(k) => k(a, b),
            None => Ok(0.0),
        }
    }

    pub fn plane_at(&self, a: f64, b: f64) -> Result<Plane> {
        Ok(Plane { a, b, offset: self.offset(a, b)? })
    }

    /// Signed family function `f(x, y, z, a, b) = a·x + b·y + k(a, b) − z`.
    pub fn f(&self, p: Point3, a: f64, b: f64) -> Result<f64> {
        Ok(a * p[0] + b * p[1] + self.offset(a, b)? - p[2])
    }

    /// `(|f|, |∂f/∂t|)` at `p` for the one-parameter subfamily `t ↦ (a(t), b(t))`.
    /// The parameter derivative is always a central difference.
    pub fn membership(
        &self,
        coupling: impl Fn(f64) -> Result<(f64, f64)>,
        p: Point3,
        t: f64,
        cfg: &ToleranceConfig,
    ) -> Result<(f64, f64)> {
        let along = |s: f64| {
            let (a, b) = coupling(s)?;
            self.f(p, a, b)
        };
        let f = along(t)?;
        let ft = diff_central(along, t, cfg)?;
        Ok((f.abs(), ft.abs()))
    }
}

/// `b = φ(a)` on an interval of `a`.
#[derive(Clone)]
pub struct FunctionOfA {
    pub phi: Fn1,
    pub phi_prime: Option<Fn1>,
    pub domain: Interval,
}

/// Relative agreement required between a supplied `φ′` and finite differences.
pub const DERIVATIVE_AGREEMENT: f64 = 1e-5;

impl FunctionOfA {
    pub fn new(phi: Fn1, domain: Interval) -> Self {
        FunctionOfA { phi, phi_prime: None, domain }
    }

    pub fn with_derivative(mut self, phi_prime: Fn1) -> Self {
        self.phi_prime = Some(phi_prime);
        self
    }

    /// `φ` from an expression in `a`; `φ′` from `phi_prime`, or by dual
    /// numbers when `exact_derivative` is set and no `phi_prime` is given.
    pub fn from_exprs(phi: &Expr, phi_prime: Option<&Expr>, domain: Interval, exact_derivative: bool) -> Result<Self> {
        let f = FunctionOfA::new(fn1_from_expr(phi, "a")?, domain);
        Ok(match (phi_prime, exact_derivative) {
            (Some(d), _) => f.with_derivative(fn1_from_expr(d, "a")?),
            (None, true) => f.with_derivative(derivative_from_expr(phi, "a")?),
            (None, false) => f,
        })
    }

    pub fn phi(&self, a: f64) -> Result<f64> {
        (self.phi)(a)
    }

    /// `φ′(a)`: the supplied derivative, or a central difference of `φ`.
    pub fn derivative(&self, a: f64, cfg: &ToleranceConfig) -> Result<f64> {
        match &self.phi_prime {
            Some(d) => d(a),
            None => diff_central(|t| self.phi(t), a, cfg),
        }
    }

    /// Largest relative disagreement `|φ′ − Dφ| / (1 + |φ′|)` over `n`
    /// interior samples; fails with [`Error::DerivativeMismatch`] above
    /// [`DERIVATIVE_AGREEMENT`]. Trivially zero when no `φ′` is supplied.
    pub fn check_derivative(&self, n: usize, cfg: &ToleranceConfig) -> Result<f64> {
        let Some(d) = &self.phi_prime else { return Ok(0.0) };
        let inset = 2.0 * cfg.step_at(self.domain.lo.abs().max(self.domain.hi.abs()));
        let mut worst: f64 = 0.0;
        for a in linspace(self.domain.lo + inset, self.domain.hi - inset, n.max(2)) {
            let analytic = d(a)?;
            let numeric = diff_central(|t| self.phi(t), a, cfg)?;
            let rel = (analytic - numeric).abs() / (1.0 + analytic.abs());
            if rel > DERIVATIVE_AGREEMENT {
                return Err(Error::DerivativeMismatch { at: a, analytic, numeric });
            }
            worst = worst.max(rel);
        }
        Ok(worst)
    }
}

/// `rel(a, b) = 0` on `a_domain × b_domain`.
#[derive(Clone)]
pub struct ImplicitRelation {
    pub rel: Fn2,
    pub a_domain: Interval,
    pub b_domain: Interval,
}

/// `(a, b) = g(θ)`, with blow-up points excluded.
#[derive(Clone)]
pub struct ParametricCurve {
    pub g: CurveFn,
    pub theta_domain: Interval,
    pub excluded: Vec<f64>,
    pub exclusion_radius: f64,
    /// Distances to excluded points are measured modulo this period, if any.
    pub period: Option<f64>,
}

/// Default radius of the excluded neighbourhoods around blow-up parameters.
pub const DEFAULT_EXCLUSION_RADIUS: f64 = 1e-3;

impl ParametricCurve {
    pub fn new(g: CurveFn, theta_domain: Interval) -> Self {
        ParametricCurve {
            g,
            theta_domain,
            excluded: Vec::new(),
            exclusion_radius: DEFAULT_EXCLUSION_RADIUS,
            period: None,
        }
    }

    pub fn excluding(mut self, points: &[f64], radius: f64) -> Self {
        self.excluded = points.to_vec();
        self.exclusion_radius = radius;
        self
    }

    pub fn periodic(mut self, period: f64) -> Self {
        self.period = Some(period);
        self
    }

    /// Reject `θ` outside the domain or inside an excluded neighbourhood.
    pub fn check(&self, theta: f64) -> Result<()> {
        if !self.theta_domain.contains(theta) {
            return Err(Error::OutOfDomain {
                what: "theta",
                value: theta,
                lo: self.theta_domain.lo,
                hi: self.theta_domain.hi,
            });
        }
        for &e in &self.excluded {
            let mut d = (theta - e).abs();
            if let Some(p) = self.period {
                d %= p;
                d = d.min(p - d);
            }
            if d < self.exclusion_radius {
                return Err(Error::ExcludedParameter { param: theta, excluded: e, radius: self.exclusion_radius });
            }
        }
        Ok(())
    }

    pub fn eval(&self, theta: f64) -> Result<(f64, f64)> {
        let [a, b] = (self.g)(theta)?;
        Ok((a, b))
    }
}

/// `(a, b) = m(x, y)`: a tangent-plane assignment over the `(x, y)` plane.
#[derive(Clone)]
pub struct InverseMap {
    pub m: MapFn,
    pub xy_domain: Rect,
}

impl InverseMap {
    pub fn eval(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let [a, b] = (self.m)(x, y)?;
        Ok((a, b))
    }
}

/// The four coupling kinds between `a` and `b`.
#[derive(Clone)]
pub enum ConstraintCurve {
    FunctionOfA(FunctionOfA),
    ImplicitRelation(ImplicitRelation),
    ParametricCurve(ParametricCurve),
    InverseMap(InverseMap),
}

impl ConstraintCurve {
    pub fn kind(&self) -> &'static str {
        match self {
            ConstraintCurve::FunctionOfA(_) => "function",
            ConstraintCurve::ImplicitRelation(_) => "implicit",
            ConstraintCurve::ParametricCurve(_) => "parametric",
            ConstraintCurve::InverseMap(_) => "inverse_map",
        }
    }
}

impl fmt::Debug for ConstraintCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConstraintCurve::{}", self.kind())
    }
}

/// Argument to [`resolve`]: `a` or `θ` for one-parameter kinds, a point for
/// the others.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param {
    Scalar(f64),
    Point([f64; 2]),
}

/// The coupled pair `(a, b)` for a constraint and its parameter.
///
/// `FunctionOfA` takes `a`, `ParametricCurve` takes `θ`, `InverseMap` takes
/// `(x, y)`. `ImplicitRelation` takes a candidate `(a, b)` and returns it
/// unchanged if it lies on the relation.
pub fn resolve(c: &ConstraintCurve, param: Param, cfg: &ToleranceConfig) -> Result<(f64, f64)> {
    let wrong = |expected: &str| {
        Err(Error::InvalidConfig(format!("{} constraint expects a {expected} parameter", c.kind())))
    };
    match (c, param) {
        (ConstraintCurve::FunctionOfA(f), Param::Scalar(a)) => {
            if !f.domain.contains(a) {
                return Err(Error::OutOfDomain { what: "a", value: a, lo: f.domain.lo, hi: f.domain.hi });
            }
            Ok((a, f.phi(a)?))
        }
        (ConstraintCurve::ParametricCurve(g), Param::Scalar(theta)) => {
            g.check(theta)?;
            g.eval(theta)
        }
        (ConstraintCurve::InverseMap(m), Param::Point(p)) => {
            if !m.xy_domain.contains(p) {
                let (what, value, iv) =
                    if m.xy_domain.x.contains(p[0]) { ("y", p[1], m.xy_domain.y) } else { ("x", p[0], m.xy_domain.x) };
                return Err(Error::OutOfDomain { what, value, lo: iv.lo, hi: iv.hi });
            }
            m.eval(p[0], p[1])
        }
        (ConstraintCurve::ImplicitRelation(r), Param::Point([a, b])) => {
            if !r.a_domain.contains(a) {
                return Err(Error::OutOfDomain { what: "a", value: a, lo: r.a_domain.lo, hi: r.a_domain.hi });
            }
            let v = (r.rel)(a, b)?;
            if v.abs() > cfg.residual_tol {
                return Err(Error::NotOnSurface { residual: v.abs() });
            }
            Ok((a, b))
        }
        (ConstraintCurve::FunctionOfA(_) | ConstraintCurve::ParametricCurve(_), Param::Point(_)) => wrong("scalar"),
        (ConstraintCurve::InverseMap(_) | ConstraintCurve::ImplicitRelation(_), Param::Scalar(_)) => wrong("point"),
    }
}

/// One functional sheet `b = ψ(a)` of an implicit relation.
///
/// The sheet is stored as a sorted list of knots on the relation; `ψ(a)`
/// between knots is the root of `rel(a, ·)` nearest to the interpolated
/// knot value, polished to machine precision.
#[derive(Clone)]
pub struct Branch {
    rel: Fn2,
    b_domain: Interval,
    knots: Vec<(f64, f64)>,
    pub a_interval: Interval,
}

impl fmt::Debug for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Branch")
            .field("a_interval", &self.a_interval)
            .field("knots", &self.knots.len())
            .finish()
    }
}

impl Branch {
    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn relation(&self) -> &Fn2 {
        &self.rel
    }

    pub fn psi(&self, a: f64) -> Result<f64> {
        if !self.a_interval.contains(a) {
            return Err(Error::OutOfDomain { what: "a", value: a, lo: self.a_interval.lo, hi: self.a_interval.hi });
        }
        let i = self.knots.partition_point(|&(ka, _)| ka < a);
        if i < self.knots.len() && self.knots[i].0 == a {
            return Ok(self.knots[i].1);
        }
        // a lies strictly between knots i-1 and i
        let (a0, b0) = self.knots[i - 1];
        let (a1, b1) = self.knots[i];
        let pred = b0 + (b1 - b0) * (a - a0) / (a1 - a0);
        local_root(&self.rel, a, pred, (b1 - b0).abs(), self.b_domain)
    }

    pub fn psi_prime(&self, a: f64, cfg: &ToleranceConfig) -> Result<f64> {
        diff_central(|t| self.psi(t), a, cfg)
    }
}

/// Resolution of the sign-change scan in `b` at each sampled `a`.
const B_SCAN_INTERVALS: usize = 1024;
const MAX_FOLD_BISECTIONS: usize = 80;

fn polish_cfg() -> ToleranceConfig {
    ToleranceConfig { root_tol: 4.0 * f64::EPSILON, ..ToleranceConfig::default() }
}

fn same_sign(u: f64, v: f64) -> bool {
    (u > 0.0 && v > 0.0) || (u < 0.0 && v < 0.0)
}

/// All roots of `b ↦ rel(a, b)` found by sign-change scanning; points where
/// `rel` is undefined are skipped.
fn scan_roots(rel: &Fn2, a: f64, b_domain: Interval) -> Result<Vec<f64>> {
    let bs = b_domain.linspace(B_SCAN_INTERVALS + 1);
    let mut values = Vec::with_capacity(bs.len());
    for &b in &bs {
        values.push(match rel(a, b) {
            Ok(v) if v.is_finite() => Some(v),
            Ok(_) => None,
            Err(e) if e.is_domain() => None,
            Err(e) => return Err(e),
        });
    }
    let cfg = polish_cfg();
    let mut roots = Vec::new();
    for i in 0..bs.len() {
        if values[i] == Some(0.0) {
            roots.push(bs[i]);
        }
        if i + 1 < bs.len() {
            if let (Some(u), Some(v)) = (values[i], values[i + 1]) {
                if u * v < 0.0 {
                    roots.push(find_root(|b| rel(a, b), bs[i], bs[i + 1], &cfg)?);
                }
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (1.0 + y.abs()));
    Ok(roots)
}

/// Root of `rel(a, ·)` nearest to `pred`, found by expanding a window
/// around it until the sign changes. `scale` sets the initial window.
fn local_root(rel: &Fn2, a: f64, pred: f64, scale: f64, b_domain: Interval) -> Result<f64> {
    let cfg = polish_cfg();
    let f0 = rel(a, pred)?;
    if f0 == 0.0 {
        return Ok(pred);
    }
    let floor = 4.0 * f64::EPSILON * (1.0 + pred.abs());
    let mut step = (1e-3 * scale).max(floor);
    loop {
        let mut best: Option<f64> = None;
        let mut clamped = 0;
        for side in [-1.0, 1.0] {
            let b1 = (pred + side * step).clamp(b_domain.lo, b_domain.hi);
            if b1 == b_domain.lo || b1 == b_domain.hi {
                clamped += 1;
            }
            if b1 == pred {
                continue;
            }
            let f1 = match rel(a, b1) {
                Ok(v) => v,
                Err(e) if e.is_domain() => continue,
                Err(e) => return Err(e),
            };
            if !same_sign(f0, f1) {
                let r = find_root(|b| rel(a, b), pred, b1, &cfg)?;
                if best.is_none_or(|q| (r - pred).abs() < (q - pred).abs()) {
                    best = Some(r);
                }
            }
        }
        if let Some(r) = best {
            return Ok(r);
        }
        if clamped == 2 {
            return Err(Error::NoRoots);
        }
        step *= 1.5;
    }
}

struct Thread {
    knots: Vec<(f64, f64)>,
    first_slice: usize,
    last_slice: usize,
}

/// Split an implicit relation into functional branches `b = ψ(a)`.
///
/// Roots are found on `a_samples` equally spaced slices of `a_domain`,
/// threaded into branches by nearest neighbour (jumps larger than ten
/// times the median spacing between roots of one slice start a new
/// branch), and each
/// branch is extended by bisection towards the fold or boundary where it
/// stops.
pub fn enumerate_branches(c: &ImplicitRelation, a_samples: usize) -> Result<Vec<Branch>> {
    if a_samples < 2 {
        return Err(Error::InvalidConfig(format!("a_samples must be at least 2, got {a_samples}")));
    }
    let a_grid = c.a_domain.linspace(a_samples);
    let slices = a_grid.iter().map(|&a| scan_roots(&c.rel, a, c.b_domain)).collect::<Result<Vec<_>>>()?;
    if slices.iter().all(|s| s.is_empty()) {
        return Err(Error::NoRoots);
    }

    // Typical distance between distinct roots of one slice; with a single
    // root everywhere nothing competes, so jumps are unbounded.
    let mut spacings: Vec<f64> = slices.iter().flat_map(|r| r.windows(2).map(|w| w[1] - w[0])).collect();
    spacings.sort_by(f64::total_cmp);
    let cap = match spacings.get(spacings.len() / 2) {
        Some(&m) => (10.0 * m).max(1e-6 * c.b_domain.width()),
        None => f64::INFINITY,
    };

    let mut threads: Vec<Thread> = Vec::new();
    for (i, roots) in slices.iter().enumerate() {
        let a = a_grid[i];
        let mut taken = vec![false; roots.len()];
        if i > 0 {
            let mut pairs = Vec::new();
            for (t, th) in threads.iter().enumerate() {
                if th.last_slice + 1 != i {
                    continue;
                }
                let last_b = th.knots.last().expect("threads are never empty").1;
                for (k, &b) in roots.iter().enumerate() {
                    let d = (b - last_b).abs();
                    if d <= cap {
                        pairs.push((d, t, k));
                    }
                }
            }
            pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
            let mut extended = vec![false; threads.len()];
            for (_, t, k) in pairs {
                if extended[t] || taken[k] {
                    continue;
                }
                extended[t] = true;
                taken[k] = true;
                threads[t].knots.push((a, roots[k]));
                threads[t].last_slice = i;
            }
        }
        for (k, &b) in roots.iter().enumerate() {
            if !taken[k] {
                threads.push(Thread { knots: vec![(a, b)], first_slice: i, last_slice: i });
            }
        }
    }

    let last = a_grid.len() - 1;
    let mut extended = Vec::with_capacity(threads.len());
    for mut th in threads {
        if th.knots.len() == 1 {
            extended.push(th.knots);
            continue;
        }
        if th.last_slice < last {
            let ext = extend_to_fold(c, &th.knots, a_grid[th.last_slice + 1], cap);
            th.knots.extend(ext);
        }
        if th.first_slice > 0 {
            let reversed: Vec<_> = th.knots.iter().rev().copied().collect();
            let mut ext = extend_to_fold(c, &reversed, a_grid[th.first_slice - 1], cap);
            ext.reverse();
            ext.extend(th.knots);
            th.knots = ext;
        }
        extended.push(th.knots);
    }

    // A lone root where two sheets meet (a fold sampled exactly) is already
    // the end of the sheets extended into it.
    let near_end = |p: (f64, f64), other: &[(f64, f64)]| {
        [other[0], other[other.len() - 1]].iter().any(|q| (q.0 - p.0).abs() <= cap && (q.1 - p.1).abs() <= cap)
    };
    let keep: Vec<bool> = (0..extended.len())
        .map(|i| {
            extended[i].len() > 1
                || !extended.iter().enumerate().any(|(j, o)| j != i && o.len() > 1 && near_end(extended[i][0], o))
        })
        .collect();

    let mut branches = Vec::with_capacity(extended.len());
    for (knots, keep) in extended.into_iter().zip(keep) {
        if !keep {
            continue;
        }
        let a_interval = Interval::new(knots[0].0, knots[knots.len() - 1].0);
        branches.push(Branch { rel: c.rel.clone(), b_domain: c.b_domain, knots, a_interval });
    }
    Ok(branches)
}

/// Bisect between the last knot of `knots` and `a_fail` (where the branch
/// was not found), returning every successfully continued knot in order.
fn extend_to_fold(c: &ImplicitRelation, knots: &[(f64, f64)], a_fail: f64, cap: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let (mut a_ok, mut b_ok) = knots[knots.len() - 1];
    let mut gap = if knots.len() >= 2 { (b_ok - knots[knots.len() - 2].1).abs() } else { c.b_domain.width() };
    let mut a_bad = a_fail;
    for _ in 0..MAX_FOLD_BISECTIONS {
        let mid = 0.5 * (a_ok + a_bad);
        if mid == a_ok || mid == a_bad {
            break;
        }
        match local_root(&c.rel, mid, b_ok, gap.max(f64::EPSILON), c.b_domain) {
            Ok(b) if (b - b_ok).abs() <= cap => {
                gap = (b - b_ok).abs();
                a_ok = mid;
                b_ok = b;
                out.push((mid, b));
            }
            _ => a_bad = mid,
        }
    }
    out
}

/// Build an `Fn2` from a closure.
pub fn fn2(f: impl Fn(f64, f64) -> Result<f64> + Send + Sync + 'static) -> Fn2 {
    Arc::new(f)
}

//! Shared numeric kernel: central differences, composite Simpson
//! quadrature, a safeguarded bisection/secant root finder and gradients of
//! implicit surfaces.
//!
//! All routines are pure and deterministic. Functions passed in return
//! [`Result`] so that domain errors raised deep inside a user expression
//! propagate unchanged to the caller.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::exprlang::Expr;
use crate::{Error, Point3, Result};

/// `f64 -> f64`, e.g. `φ(a)`.
pub type Fn1 = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;
/// `(f64, f64) -> f64`, e.g. `h(x, y)` or a relation `rel(a, b)`.
pub type Fn2 = Arc<dyn Fn(f64, f64) -> Result<f64> + Send + Sync>;
/// `(f64, f64, f64) -> f64`, e.g. an implicit surface `F(x, y, z)`.
pub type Fn3 = Arc<dyn Fn(f64, f64, f64) -> Result<f64> + Send + Sync>;
/// A planar curve `t -> (u(t), v(t))`.
pub type CurveFn = Arc<dyn Fn(f64) -> Result<[f64; 2]> + Send + Sync>;
/// A planar map `(x, y) -> (u, v)`.
pub type MapFn = Arc<dyn Fn(f64, f64) -> Result<[f64; 2]> + Send + Sync>;

/// `(x, y) -> (∂/∂x, ∂/∂y)` of some `Fn2`.
pub type Grad2 = Arc<dyn Fn(f64, f64) -> Result<[f64; 2]> + Send + Sync>;

/// Wrap an expression in one variable.
pub fn fn1_from_expr(expr: &Expr, var: &str) -> Result<Fn1> {
    let bound = expr.bind(&[var])?;
    Ok(Arc::new(move |t| Ok(bound.eval(&[t])?)))
}

/// Wrap an expression in two variables, taken in the given order.
pub fn fn2_from_expr(expr: &Expr, vars: [&str; 2]) -> Result<Fn2> {
    let bound = expr.bind(&vars)?;
    Ok(Arc::new(move |u, v| Ok(bound.eval(&[u, v])?)))
}

/// Wrap an expression in three variables, taken in the given order.
pub fn fn3_from_expr(expr: &Expr, vars: [&str; 3]) -> Result<Fn3> {
    let bound = expr.bind(&vars)?;
    Ok(Arc::new(move |u, v, w| Ok(bound.eval(&[u, v, w])?)))
}

/// Both partials of a two-variable expression by dual numbers.
pub fn grad2_from_expr(expr: &Expr, vars: [&str; 2]) -> Result<Grad2> {
    let bound = expr.bind(&vars)?;
    Ok(Arc::new(move |u, v| Ok([bound.eval_d(&[u, v], 0)?.derivative, bound.eval_d(&[u, v], 1)?.derivative])))
}

/// Exact gradient of a three-variable expression.
pub type Grad3 = Arc<dyn Fn(f64, f64, f64) -> Result<[f64; 3]> + Send + Sync>;

/// Gradient of `expr` in `vars` by forward-mode dual numbers.
pub fn grad3_from_expr(expr: &Expr, vars: [&str; 3]) -> Result<Grad3> {
    let bound = expr.bind(&vars)?;
    Ok(Arc::new(move |u, v, w| {
        let at = [u, v, w];
        Ok([bound.eval_d(&at, 0)?.derivative, bound.eval_d(&at, 1)?.derivative, bound.eval_d(&at, 2)?.derivative])
    }))
}

/// Derivative of a one-variable expression by forward-mode dual numbers.
pub fn derivative_from_expr(expr: &Expr, var: &str) -> Result<Fn1> {
    let bound = expr.bind(&[var])?;
    Ok(Arc::new(move |t| Ok(bound.eval_d(&[t], 0)?.derivative)))
}

/// Tolerances shared by every numeric routine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    /// Relative central-difference step; the absolute step is `fd_step·(1+|a|)`.
    pub fd_step: f64,
    pub root_tol: f64,
    pub residual_tol: f64,
    /// Number of Simpson panels; must be even.
    pub quad_panels: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig { fd_step: 1e-6, root_tol: 1e-12, residual_tol: 1e-8, quad_panels: 400 }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be a positive finite number, got {v}")))
            }
        };
        positive("fd_step", self.fd_step)?;
        positive("root_tol", self.root_tol)?;
        positive("residual_tol", self.residual_tol)?;
        if self.quad_panels == 0 || self.quad_panels % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "quad_panels must be positive and even, got {}",
                self.quad_panels
            )));
        }
        Ok(())
    }

    /// Absolute finite-difference step at `a`.
    pub fn step_at(&self, a: f64) -> f64 {
        self.fd_step * (1.0 + a.abs())
    }
}

/// Closed real interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo && t <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// `n` equally spaced points including both endpoints.
    pub fn linspace(&self, n: usize) -> Vec<f64> {
        linspace(self.lo, self.hi, n)
    }
}

/// Axis-aligned rectangle `x × y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: Interval,
    pub y: Interval,
}

impl Rect {
    pub const fn new(x: Interval, y: Interval) -> Self {
        Rect { x, y }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.x.contains(p[0]) && self.y.contains(p[1])
    }

    /// `n × n` grid strictly inside the rectangle, row-major in `x` then `y`.
    pub fn interior_grid(&self, n: usize) -> Vec<[f64; 2]> {
        let xs: Vec<f64> =
            (0..n).map(|i| self.x.lo + (i as f64 + 0.5) / n as f64 * self.x.width()).collect();
        let ys: Vec<f64> =
            (0..n).map(|j| self.y.lo + (j as f64 + 0.5) / n as f64 * self.y.width()).collect();
        xs.iter().flat_map(|&x| ys.iter().map(move |&y| [x, y])).collect()
    }
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { hi } else { lo + i as f64 * step }).collect()
        }
    }
}

fn finite(v: f64, what: &str, at: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{what} is not finite at {at}")))
    }
}

/// Central difference `(f(a+h) - f(a-h)) / 2h` with `h = fd_step·(1+|a|)`.
pub fn diff_central(f: impl Fn(f64) -> Result<f64>, a: f64, cfg: &ToleranceConfig) -> Result<f64> {
    let h = cfg.step_at(a);
    let hi = finite(f(a + h)?, "function value", a + h)?;
    let lo = finite(f(a - h)?, "function value", a - h)?;
    Ok((hi - lo) / (2.0 * h))
}

/// Composite Simpson rule on `[a0, a1]` with `cfg.quad_panels` panels.
pub fn integrate(f: impl Fn(f64) -> Result<f64>, a0: f64, a1: f64, cfg: &ToleranceConfig) -> Result<f64> {
    if a0 > a1 {
        return integrate(f, a1, a0, cfg).map(|v| -v);
    }
    let n = cfg.quad_panels;
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidConfig(format!("quad_panels must be positive and even, got {n}")));
    }
    if a0 == a1 {
        return Ok(0.0);
    }
    let h = (a1 - a0) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let x = a0 + i as f64 * h;
        let v = finite(f(x)?, "integrand", x)?;
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    let ends = finite(f(a0)?, "integrand", a0)? + finite(f(a1)?, "integrand", a1)?;
    Ok(h / 3.0 * (ends + 4.0 * odd + 2.0 * even))
}

const MAX_ROOT_ITERATIONS: usize = 400;

/// Root of `f` in `[lo, hi]` by bisection with secant acceleration.
///
/// Requires `f(lo)·f(hi) ≤ 0`. Stops when `|f(r)| ≤ root_tol` or the
/// bracket width drops below `root_tol·(1+|r|)`; the result always lies in
/// the original bracket.
pub fn find_root(f: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64, cfg: &ToleranceConfig) -> Result<f64> {
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut f_lo = finite(f(lo)?, "function value", lo)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let mut f_hi = finite(f(hi)?, "function value", hi)?;
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoBracket { lo, hi, f_lo, f_hi });
    }

    let mut use_secant = true;
    for _ in 0..MAX_ROOT_ITERATIONS {
        let width = hi - lo;
        let mid = lo + 0.5 * width;
        let candidate = if use_secant {
            let s = hi - f_hi * (hi - lo) / (f_hi - f_lo);
            if s > lo && s < hi {
                s
            } else {
                mid
            }
        } else {
            mid
        };
        // no representable point strictly inside the bracket
        let stalled = !(mid > lo && mid < hi);
        let f_c = finite(f(candidate)?, "function value", candidate)?;
        if f_c == 0.0 {
            return Ok(candidate);
        }
        if f_c.signum() == f_lo.signum() {
            lo = candidate;
            f_lo = f_c;
        } else {
            hi = candidate;
            f_hi = f_c;
        }
        let best = if f_lo.abs() < f_hi.abs() { lo } else { hi };
        let new_width = hi - lo;
        if f_lo.abs().min(f_hi.abs()) <= cfg.root_tol
            || new_width <= cfg.root_tol * (1.0 + best.abs())
            || stalled
        {
            return Ok(best);
        }
        // A secant step that failed to halve the bracket is followed by bisection.
        use_secant = new_width <= 0.5 * width;
    }
    Err(Error::MaxIterations(MAX_ROOT_ITERATIONS))
}

/// Central-difference gradient of `F` at `p`, component steps as in [`diff_central`].
pub fn gradient3(
    f: impl Fn(f64, f64, f64) -> Result<f64>,
    p: Point3,
    cfg: &ToleranceConfig,
) -> Result<[f64; 3]> {
    let [x, y, z] = p;
    Ok([
        diff_central(|t| f(t, y, z), x, cfg)?,
        diff_central(|t| f(x, t, z), y, cfg)?,
        diff_central(|t| f(x, y, t), z, cfg)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    /// Bimodal bump spline, written out piece by piece.
    fn spline(a: f64) -> f64 {
        let bump = |k: f64| ((a - k).powi(2) - 1.0).powi(2);
        if (0.0..=1.0).contains(&a) {
            bump(1.0)
        } else if (1.0..=2.0).contains(&a) {
            0.5 * bump(1.0) + 0.5
        } else if (2.0..=3.0).contains(&a) {
            0.5 * bump(3.0) + 0.5
        } else if (3.0..=4.0).contains(&a) {
            bump(3.0)
        } else {
            0.0
        }
    }

    /// Hand derivative of the pieces: d/da ((a-k)^2-1)^2 = 4(a-k)((a-k)^2-1).
    fn spline_slope(a: f64) -> f64 {
        let d = |k: f64| 4.0 * (a - k) * ((a - k).powi(2) - 1.0);
        if (0.0..1.0).contains(&a) {
            d(1.0)
        } else if (1.0..2.0).contains(&a) {
            0.5 * d(1.0)
        } else if (2.0..3.0).contains(&a) {
            0.5 * d(3.0)
        } else if (3.0..=4.0).contains(&a) {
            d(3.0)
        } else {
            0.0
        }
    }

    #[test]
    fn diff_central_examples() {
        assert!((diff_central(|a| Ok(a * a), 3.0, &cfg()).unwrap() - 6.0).abs() < 1e-6);
        assert!((diff_central(|a| Ok(1.0 / a), 2.0, &cfg()).unwrap() + 0.25).abs() < 1e-6);
        // knot at 2: both adjacent pieces have slope 0 there
        let d = diff_central(|a| Ok(spline(a)), 2.0, &cfg()).unwrap();
        assert!((d - 0.0).abs() < 1e-6, "{d}");
        for a in [0.3, 1.5, 2.5, 3.7] {
            let d = diff_central(|a| Ok(spline(a)), a, &cfg()).unwrap();
            assert!((d - spline_slope(a)).abs() < 1e-6, "a={a}: {d} vs {}", spline_slope(a));
        }
    }

    #[test]
    fn diff_central_propagates_domain_errors() {
        let f = |a: f64| if a < 0.0 { Err(Error::Domain("neg".into())) } else { Ok(a.sqrt()) };
        assert!(diff_central(f, 0.0, &cfg()).unwrap_err().is_domain());
    }

    #[test]
    fn integrate_examples() {
        assert_eq!(integrate(|_| Ok(1.0), 0.0, 2.0, &cfg()).unwrap(), 2.0);
        assert!((integrate(|a| Ok(a), 0.0, 1.0, &cfg()).unwrap() - 0.5).abs() < 1e-15);
        // 8/15 + 23/30 + 23/30 + 8/15 = 13/5
        let total = integrate(|a| Ok(spline(a)), 0.0, 4.0, &cfg()).unwrap();
        assert!((total - 2.6).abs() < 1e-6, "{total}");
        assert_eq!(integrate(|a| Ok(a), 1.0, 0.0, &cfg()).unwrap(), -integrate(|a| Ok(a), 0.0, 1.0, &cfg()).unwrap());
    }

    #[test]
    fn integrate_rejects_odd_panels() {
        let c = ToleranceConfig { quad_panels: 3, ..cfg() };
        assert!(matches!(integrate(|a| Ok(a), 0.0, 1.0, &c), Err(Error::InvalidConfig(_))));
        assert!(c.validate().is_err());
    }

    #[test]
    fn find_root_examples() {
        let r = find_root(|a| Ok(a * a - 2.0), 1.0, 2.0, &cfg()).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        let x = 0.5;
        let r = find_root(|a| Ok(2.0 * a * x - 1.0), 0.0, 2.0, &cfg()).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let r = find_root(|a| Ok(spline(a) - 0.75), 0.0, 1.0, &cfg()).unwrap();
        assert!((spline(r) - 0.75).abs() < 1e-12, "{}", spline(r));
    }

    #[test]
    fn find_root_errors() {
        assert!(matches!(find_root(|a| Ok(a * a + 1.0), -1.0, 1.0, &cfg()), Err(Error::NoBracket { .. })));
        // plateau at zero on the left: bracketing still converges
        let r = find_root(|a| Ok(if a < 1.0 { 0.0f64.min(a - 1.0) } else { a - 1.0 }), 0.5, 3.0, &cfg()).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gradient3_examples() {
        let g = gradient3(|x, y, z| Ok(x * x + y * y + z * z), [1.0, 2.0, 3.0], &cfg()).unwrap();
        for (gi, ei) in g.iter().zip([2.0, 4.0, 6.0]) {
            assert!((gi - ei).abs() < 1e-5);
        }
        let cone = |x: f64, y: f64, z: f64| Ok((x - z).powi(2) + (y - z).powi(2) - z * z);
        let g = gradient3(cone, [2.0, 1.0, 1.0], &cfg()).unwrap();
        for (gi, ei) in g.iter().zip([2.0, 0.0, -4.0]) {
            assert!((gi - ei).abs() < 1e-5);
        }
        let quad = |x: f64, y: f64, z: f64| Ok(z * z - 2.0 * x * z - 2.0 * y * z + 2.0 * x * y);
        let g = gradient3(quad, [3.0, 4.0, 12.0], &cfg()).unwrap();
        for (gi, ei) in g.iter().zip([-16.0, -18.0, 10.0]) {
            assert!((gi - ei).abs() < 1e-4);
        }
    }

    #[test]
    fn linspace_is_inclusive() {
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(linspace(2.0, 5.0, 1), vec![2.0]);
        assert_eq!(*linspace(0.1, 10.0, 64).last().unwrap(), 10.0);
    }
}

//! The `clairaut` command-line front end.
//!
//! Subcommands build envelope clouds from a family spec, verify surfaces
//! against the equation, classify envelope candidates, take `z = 1`
//! cross-sections and run the catalog. Point clouds travel as CSV with the
//! fixed header `x,y,z,param,f_resid,stat_resid`; reports are JSON.
//!
//! Exit status is 0 on success, 1 when a check fails or a computation
//! cannot be completed and 2 for usage and spec errors. Errors go to
//! standard error as one JSON object per line.
//!
//! Expressions use the grammar of [`crate::exprlang`]: numbers, variables,
//! `+ - * / ^`, unary minus, parentheses and the functions `sqrt`, `sin`,
//! `cos`, `exp`, `ln`.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{classify_curve_point, classify_locus, detect_multivalued, DEFAULT_RADIUS_SEP};
use crate::catalog::{self, EntryReport, DEFAULT_GENERATOR};
use crate::envelope::{
    cross_section_z1, envelope_branch, envelope_function_constraint, envelope_inverse_map, envelope_parametric_planes,
    EnvelopePoint, SampledSurface, DEFAULT_S_GRID, STATIONARITY_TOL,
};
use crate::exprlang::{parse, Expr};
use crate::families::{
    enumerate_branches, FunctionOfA, ImplicitRelation, InverseMap, ParametricCurve, PlaneFamily,
    DEFAULT_EXCLUSION_RADIUS,
};
use crate::numerics::{fn1_from_expr, fn2_from_expr, fn3_from_expr, linspace, CurveFn, Interval, Rect, ToleranceConfig};
use crate::verify::{
    clairaut_report_explicit, clairaut_report_implicit, euler_residual, homogeneity_check, implicit_membership,
    ExplicitGraph, ImplicitLevelSet, ResidualReport,
};
use crate::{Error, Point2, Point3};

/// Environment variable overriding the catalog output directory.
pub const OUT_DIR_ENV: &str = "CLAIRAUT_OUT_DIR";
/// Header of every point-cloud CSV.
pub const CSV_HEADER: [&str; 6] = ["x", "y", "z", "param", "f_resid", "stat_resid"];
/// Default tolerance for PDE residual checks.
pub const PDE_TOL: f64 = 1e-7;

#[derive(Parser, Debug)]
#[command(name = "clairaut", version, about = "Envelopes and singular integrals of x*z_x + y*z_y = z")]
pub struct Cli {
    #[command(flatten)]
    pub tol: TolArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Overrides for [`ToleranceConfig`]; unset values keep the spec's or the defaults.
#[derive(Args, Debug, Default, Clone)]
pub struct TolArgs {
    #[arg(long, global = true)]
    pub fd_step: Option<f64>,
    #[arg(long, global = true)]
    pub root_tol: Option<f64>,
    #[arg(long, global = true)]
    pub residual_tol: Option<f64>,
    #[arg(long, global = true)]
    pub quad_panels: Option<usize>,
}

impl TolArgs {
    fn apply(&self, mut cfg: ToleranceConfig) -> Result<ToleranceConfig, CliError> {
        if let Some(v) = self.fd_step {
            cfg.fd_step = v;
        }
        if let Some(v) = self.root_tol {
            cfg.root_tol = v;
        }
        if let Some(v) = self.residual_tol {
            cfg.residual_tol = v;
        }
        if let Some(v) = self.quad_panels {
            cfg.quad_panels = v;
        }
        cfg.validate().map_err(CliError::spec)?;
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build an envelope point cloud from a family spec or inline flags.
    Envelope(EnvelopeArgs),
    /// Check a surface against the equation, homogeneity or a point cloud.
    Verify(VerifyArgs),
    /// Label envelope candidates of a curve family, or test a curve for a cusp.
    Classify(ClassifyArgs),
    /// Intersect an envelope cloud with the plane z = 1.
    CrossSection(CrossSectionArgs),
    /// List or run the built-in examples.
    Catalog(CatalogArgs),
}

#[derive(Args, Debug, Default)]
pub struct EnvelopeArgs {
    /// JSON family spec; inline flags fill in anything it leaves out.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// b = phi(a).
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<String>,
    /// Exact phi'(a); by default it is derived from --phi.
    #[arg(long, allow_hyphen_values = true)]
    pub phi_prime: Option<String>,
    /// rel(a, b) = 0.
    #[arg(long, allow_hyphen_values = true)]
    pub relation: Option<String>,
    /// (a, b) = (A(theta), B(theta)), given as two expressions.
    #[arg(long, allow_hyphen_values = true, num_args = 2, value_names = ["A", "B"])]
    pub parametric: Option<Vec<String>>,
    /// (a, b) = (A(x, y), B(x, y)), given as two expressions.
    #[arg(long, allow_hyphen_values = true, num_args = 2, value_names = ["A", "B"])]
    pub inverse_map: Option<Vec<String>>,
    #[arg(long, allow_hyphen_values = true, value_name = "LO:HI:N")]
    pub a_range: Option<String>,
    #[arg(long, allow_hyphen_values = true, value_name = "LO:HI:N")]
    pub x_range: Option<String>,
    #[arg(long, allow_hyphen_values = true, value_name = "LO:HI:N")]
    pub y_range: Option<String>,
    #[arg(long, allow_hyphen_values = true, value_name = "LO:HI:N")]
    pub theta_range: Option<String>,
    /// Scales along each characteristic ray.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub s_values: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true, value_name = "LO:HI")]
    pub a_domain: Option<String>,
    #[arg(long, allow_hyphen_values = true, value_name = "LO:HI")]
    pub b_domain: Option<String>,
    /// Parameter values excluded from a parametric constraint.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub exclude: Option<Vec<f64>>,
    #[arg(long)]
    pub period: Option<f64>,
    /// CSV output; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the full surface, diagnostics included, as JSON.
    #[arg(long)]
    pub json_out: Option<PathBuf>,
    /// Keep points that failed the acceptance test.
    #[arg(long)]
    pub include_rejected: bool,
}

#[derive(Args, Debug, Default)]
pub struct VerifyArgs {
    /// Surface F(x, y, z) = 0.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "explicit")]
    pub implicit: Option<String>,
    /// Surface z = h(x, y).
    #[arg(long, allow_hyphen_values = true)]
    pub explicit: Option<String>,
    /// Point cloud CSV with columns x, y and, for implicit surfaces, z.
    #[arg(long)]
    pub points: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true, value_name = "LO:HI:N")]
    pub x_range: Option<String>,
    #[arg(long, allow_hyphen_values = true, value_name = "LO:HI:N")]
    pub y_range: Option<String>,
    #[arg(long, value_enum)]
    pub check: Option<CheckKind>,
    /// Degree for the homogeneity and Euler checks.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub degree: f64,
    /// Pass threshold; defaults to the residual tolerance for membership and 1e-7 otherwise.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// Point-cloud membership in an implicit surface.
    Membership,
    /// The residual x*z_x + y*z_y - z.
    Clairaut,
    /// h(s*x, s*y) = s^n h(x, y).
    Homogeneity,
    /// x*h_x + y*h_y - n*h.
    Euler,
}

#[derive(Args, Debug, Default)]
pub struct ClassifyArgs {
    /// Curve family f(x, y, a) = 0.
    #[arg(long, allow_hyphen_values = true, requires = "candidates")]
    pub family: Option<String>,
    /// CSV with columns x, y and a (or param).
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    /// Parametric curve (A(t), B(t)) to test for a cusp.
    #[arg(long, allow_hyphen_values = true, num_args = 2, value_names = ["A", "B"], conflicts_with = "family", requires = "t0")]
    pub curve: Option<Vec<String>>,
    #[arg(long, allow_negative_numbers = true)]
    pub t0: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct CrossSectionArgs {
    /// Envelope cloud CSV as written by `envelope`.
    #[arg(long)]
    pub points: PathBuf,
    /// Points with |z| at or below this are dropped.
    #[arg(long, default_value_t = catalog::CROSS_SECTION_EPS)]
    pub eps: f64,
    /// CSV of (X, Y); standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Search the section for two points on one ray at different radii.
    #[arg(long)]
    pub witness: bool,
    #[arg(long, default_value_t = 1e-3)]
    pub angle_tol: f64,
    #[arg(long, default_value_t = DEFAULT_RADIUS_SEP)]
    pub radius_sep: f64,
}

#[derive(Args, Debug, Default)]
pub struct CatalogArgs {
    #[arg(long, conflicts_with_all = ["run", "run_all"])]
    pub list: bool,
    #[arg(long, allow_hyphen_values = true, value_name = "NAME", conflicts_with = "run_all")]
    pub run: Option<String>,
    #[arg(long)]
    pub run_all: bool,
    /// Directory for per-entry artifacts; CLAIRAUT_OUT_DIR when unset.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Generator H(w) for euler_generator.
    #[arg(long, default_value = DEFAULT_GENERATOR)]
    pub generator: String,
}

/// An error together with the exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

impl CliError {
    fn spec(e: impl Into<Error>) -> Self {
        let e = e.into();
        CliError { code: 2, kind: e.kind().into(), message: e.to_string() }
    }

    fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, kind: "usage".into(), message: message.into() }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError { code: 1, kind: "io".into(), message: format!("{}: {e}", path.display()) }
    }

    fn json_line(&self) -> String {
        serde_json::json!({ "error": self.kind, "message": self.message }).to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError { code: 1, kind: e.kind().into(), message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parse `args` and run; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", CliError::usage(first).json_line());
            return 2;
        }
    };
    match execute(&cli, &mut io::stdout().lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.json_line());
            e.code
        }
    }
}

/// Run a parsed command, writing reports to `out`; returns the exit status.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult<i32> {
    match &cli.command {
        Command::Envelope(a) => cmd_envelope(a, &cli.tol, out),
        Command::Verify(a) => cmd_verify(a, &cli.tol, out),
        Command::Classify(a) => cmd_classify(a, &cli.tol, out),
        Command::CrossSection(a) => cmd_cross_section(a, out),
        Command::Catalog(a) => cmd_catalog(a, &cli.tol, out),
    }
}

// ---------------------------------------------------------------------------
// family spec

/// A JSON family spec.
///
/// ```json
/// {
///   "constraint": { "kind": "function", "expr": "1/a" },
///   "grid": { "a": "0.5:4:64", "y": "0.5:4:64" },
///   "tolerances": { "residual_tol": 1e-8 },
///   "output": { "csv": "env.csv" }
/// }
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub constraint: Option<ConstraintSpec>,
    #[serde(default)]
    pub grid: GridSpec,
    pub tolerances: Option<ToleranceConfig>,
    #[serde(default)]
    pub output: OutputSpec,
}

/// The coupling between `a` and `b`. Parametric and inverse-map kinds take
/// two expressions, one for `a` and one for `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintSpec {
    /// `b = φ(a)` with `expr` in `a`.
    Function { expr: String, derivative: Option<String>, domain: Option<[f64; 2]> },
    /// `expr(a, b) = 0`.
    Implicit { expr: String, a_domain: [f64; 2], b_domain: [f64; 2], a_samples: Option<usize> },
    /// `(a, b) = (expr[0], expr[1])` in `theta`.
    Parametric {
        expr: [String; 2],
        theta_domain: Option<[f64; 2]>,
        #[serde(default)]
        exclude: Vec<f64>,
        exclusion_radius: Option<f64>,
        period: Option<f64>,
    },
    /// `(a, b) = (expr[0], expr[1])` in `x` and `y`.
    InverseMap { expr: [String; 2] },
}

/// Sample grids, each `"lo:hi:count"`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub a: Option<String>,
    pub x: Option<String>,
    pub y: Option<String>,
    pub theta: Option<String>,
    pub s: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

impl FamilySpec {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError { code: 2, kind: "spec".into(), message: e.to_string() })
    }
}

/// `lo:hi:count`, endpoints included.
pub fn parse_range(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::usage(format!("range '{s}' must be lo:hi:count with lo <= hi and count >= 1"));
    let [lo, hi, n] = parts.as_slice() else { return Err(bad()) };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi && n >= 1) {
        return Err(bad());
    }
    Ok(linspace(lo, hi, n))
}

/// `lo:hi`.
pub fn parse_interval(s: &str) -> CliResult<[f64; 2]> {
    let bad = || CliError::usage(format!("interval '{s}' must be lo:hi with lo < hi"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(bad());
    }
    Ok([lo, hi])
}

fn expr(src: &str) -> CliResult<Expr> {
    parse(src).map_err(CliError::spec)
}

/// Reject expressions that mention variables other than `allowed`.
fn expr_in(src: &str, allowed: &[&str]) -> CliResult<Expr> {
    let e = expr(src)?;
    if let Some(v) = e.free_vars().iter().find(|v| !allowed.contains(&v.as_str())) {
        return Err(CliError::spec(Error::InvalidConfig(format!(
            "'{src}' uses variable '{v}'; allowed: {}",
            allowed.join(", ")
        ))));
    }
    Ok(e)
}

fn interval(b: [f64; 2]) -> CliResult<Interval> {
    if !(b[0] < b[1]) {
        return Err(CliError::usage(format!("interval [{}, {}] is empty", b[0], b[1])));
    }
    Ok(Interval::new(b[0], b[1]))
}

fn bounds(grid: &[f64]) -> [f64; 2] {
    let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    [lo, hi]
}

/// Merge inline flags into the spec: flags win over file contents.
fn spec_from_args(a: &EnvelopeArgs) -> CliResult<FamilySpec> {
    let mut spec = match &a.spec {
        Some(p) => FamilySpec::from_json(&fs::read_to_string(p).map_err(|e| CliError::io(p, e))?)?,
        None => FamilySpec::default(),
    };
    let given = [a.phi.is_some(), a.relation.is_some(), a.parametric.is_some(), a.inverse_map.is_some()];
    if given.iter().filter(|g| **g).count() > 1 {
        return Err(CliError::usage("give at most one of --phi, --relation, --parametric, --inverse-map"));
    }
    let dom = |s: &Option<String>| s.as_deref().map(parse_interval).transpose();
    if let Some(phi) = &a.phi {
        spec.constraint =
            Some(ConstraintSpec::Function { expr: phi.clone(), derivative: a.phi_prime.clone(), domain: dom(&a.a_domain)? });
    } else if let Some(rel) = &a.relation {
        let (Some(ad), Some(bd)) = (dom(&a.a_domain)?, dom(&a.b_domain)?) else {
            return Err(CliError::usage("--relation needs --a-domain and --b-domain"));
        };
        spec.constraint = Some(ConstraintSpec::Implicit { expr: rel.clone(), a_domain: ad, b_domain: bd, a_samples: None });
    } else if let Some(p) = &a.parametric {
        spec.constraint = Some(ConstraintSpec::Parametric {
            expr: [p[0].clone(), p[1].clone()],
            theta_domain: None,
            exclude: a.exclude.clone().unwrap_or_default(),
            exclusion_radius: None,
            period: a.period,
        });
    } else if let Some(m) = &a.inverse_map {
        spec.constraint = Some(ConstraintSpec::InverseMap { expr: [m[0].clone(), m[1].clone()] });
    }
    let g = &mut spec.grid;
    for (slot, flag) in [(&mut g.a, &a.a_range), (&mut g.x, &a.x_range), (&mut g.y, &a.y_range), (&mut g.theta, &a.theta_range)]
    {
        if flag.is_some() {
            *slot = flag.clone();
        }
    }
    if a.s_values.is_some() {
        g.s = a.s_values.clone();
    }
    if a.out.is_some() {
        spec.output.csv = a.out.clone();
    }
    if a.json_out.is_some() {
        spec.output.json = a.json_out.clone();
    }
    Ok(spec)
}

fn need_grid(g: &Option<String>, name: &str) -> CliResult<Vec<f64>> {
    match g {
        Some(s) => parse_range(s),
        None => Err(CliError::usage(format!("grid '{name}' is required for this constraint kind"))),
    }
}

fn xy_grid(g: &GridSpec) -> CliResult<Vec<Point2>> {
    let xs = need_grid(&g.x, "x")?;
    let ys = need_grid(&g.y, "y")?;
    Ok(xs.iter().flat_map(|&x| ys.iter().map(move |&y| [x, y])).collect())
}

/// Build the envelope cloud a spec describes.
pub fn build_envelope(spec: &FamilySpec, cfg: &ToleranceConfig) -> CliResult<SampledSurface> {
    let fam = PlaneFamily::origin();
    let Some(c) = &spec.constraint else {
        return Err(CliError::usage("no constraint: give --spec or one of --phi, --relation, --parametric, --inverse-map"));
    };
    match c {
        ConstraintSpec::Function { expr: e, derivative, domain } => {
            let a_grid = need_grid(&spec.grid.a, "a")?;
            let y_grid = need_grid(&spec.grid.y, "y")?;
            let phi = expr_in(e, &["a"])?;
            let d = derivative.as_deref().map(|d| expr_in(d, &["a"])).transpose()?;
            let dom = match domain {
                Some(b) => interval(*b)?,
                None => {
                    let [lo, hi] = bounds(&a_grid);
                    Interval::new(lo, hi)
                }
            };
            let c = FunctionOfA::from_exprs(&phi, d.as_ref(), dom, true).map_err(CliError::spec)?;
            Ok(envelope_function_constraint(&fam, &c, &a_grid, &y_grid, cfg)?)
        }
        ConstraintSpec::Implicit { expr: e, a_domain, b_domain, a_samples } => {
            let rel = ImplicitRelation {
                rel: fn2_from_expr(&expr_in(e, &["a", "b"])?, ["a", "b"]).map_err(CliError::spec)?,
                a_domain: interval(*a_domain)?,
                b_domain: interval(*b_domain)?,
            };
            let grid = xy_grid(&spec.grid)?;
            let branches = enumerate_branches(&rel, a_samples.unwrap_or(256))?;
            let mut surfaces = branches.iter().map(|br| envelope_branch(&fam, br, &grid, cfg));
            let first = surfaces.next().expect("enumerate_branches returns at least one branch")?;
            surfaces.try_fold(first, |acc, s| Ok::<_, Error>(acc.merge(s?))).map_err(CliError::from)
        }
        ConstraintSpec::Parametric { expr: [ea, eb], theta_domain, exclude, exclusion_radius, period } => {
            let thetas = need_grid(&spec.grid.theta, "theta")?;
            let fa = fn1_from_expr(&expr_in(ea, &["theta"])?, "theta").map_err(CliError::spec)?;
            let fb = fn1_from_expr(&expr_in(eb, &["theta"])?, "theta").map_err(CliError::spec)?;
            let g: CurveFn = Arc::new(move |t| Ok([fa(t)?, fb(t)?]));
            let dom = match theta_domain {
                Some(b) => interval(*b)?,
                None => {
                    let [lo, hi] = bounds(&thetas);
                    Interval::new(lo, hi)
                }
            };
            let mut c = ParametricCurve::new(g, dom)
                .excluding(exclude, exclusion_radius.unwrap_or(DEFAULT_EXCLUSION_RADIUS));
            if let Some(p) = period {
                c = c.periodic(*p);
            }
            let s = spec.grid.s.clone().unwrap_or_else(|| DEFAULT_S_GRID.to_vec());
            Ok(envelope_parametric_planes(&fam, &c, &thetas, &s, cfg)?)
        }
        ConstraintSpec::InverseMap { expr: [ea, eb] } => {
            let fa = fn2_from_expr(&expr_in(ea, &["x", "y"])?, ["x", "y"]).map_err(CliError::spec)?;
            let fb = fn2_from_expr(&expr_in(eb, &["x", "y"])?, ["x", "y"]).map_err(CliError::spec)?;
            let grid = xy_grid(&spec.grid)?;
            let xs = bounds(&grid.iter().map(|p| p[0]).collect::<Vec<_>>());
            let ys = bounds(&grid.iter().map(|p| p[1]).collect::<Vec<_>>());
            let m = InverseMap {
                m: Arc::new(move |x, y| Ok([fa(x, y)?, fb(x, y)?])),
                xy_domain: Rect::new(Interval::new(xs[0], xs[1]), Interval::new(ys[0], ys[1])),
            };
            Ok(envelope_inverse_map(&fam, &m, &grid, cfg)?)
        }
    }
}

// ---------------------------------------------------------------------------
// CSV

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Render envelope points as CSV.
pub fn points_csv<'a>(points: impl IntoIterator<Item = &'a EnvelopePoint>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError { code: 1, kind: "io".into(), message: e.to_string() };
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for p in points {
        let row = [p.p[0], p.p[1], p.p[2], p.param, p.family_residual, p.stationarity_residual].map(fmt_f64);
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError { code: 1, kind: "io".into(), message: e.to_string() })
}

/// Render `(X, Y)` cross-section points as CSV.
pub fn section_csv(points: &[Point2]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError { code: 1, kind: "io".into(), message: e.to_string() };
    w.write_record(["X", "Y"]).map_err(csv_err)?;
    for p in points {
        w.write_record(p.map(fmt_f64)).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError { code: 1, kind: "io".into(), message: e.to_string() })
}

#[derive(Debug, Deserialize)]
struct PointRow {
    x: f64,
    y: f64,
    z: Option<f64>,
    param: Option<f64>,
    a: Option<f64>,
    f_resid: Option<f64>,
    stat_resid: Option<f64>,
}

fn read_rows(path: &Path) -> CliResult<Vec<PointRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| CliError { code: 2, kind: "csv".into(), message: format!("{}: {e}", path.display()) }))
        .collect()
}

/// Read a point-cloud CSV back as a surface; every row counts as accepted.
pub fn read_surface(path: &Path) -> CliResult<SampledSurface> {
    let rows = read_rows(path)?;
    let mut points = Vec::with_capacity(rows.len());
    for (i, r) in rows.into_iter().enumerate() {
        let z = r.z.ok_or_else(|| CliError::usage(format!("{}: row {} has no z", path.display(), i + 1)))?;
        points.push(EnvelopePoint {
            p: [r.x, r.y, z],
            param: r.param.or(r.a).unwrap_or(f64::NAN),
            family_residual: r.f_resid.unwrap_or(0.0),
            stationarity_residual: r.stat_resid.unwrap_or(0.0),
            accepted: true,
        });
    }
    Ok(SampledSurface { points, source: path.display().to_string(), diagnostics: Default::default() })
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn json_line(value: &impl Serialize) -> String {
    serde_json::to_string(value).expect("reports serialize")
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult<()> {
    writeln!(out, "{text}").map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

// ---------------------------------------------------------------------------
// subcommands

#[derive(Serialize)]
struct EnvelopeSummary<'a> {
    source: &'a str,
    points: usize,
    accepted: usize,
    skipped: usize,
    csv: Option<String>,
}

fn cmd_envelope(a: &EnvelopeArgs, tol: &TolArgs, out: &mut dyn Write) -> CliResult<i32> {
    let spec = spec_from_args(a)?;
    let cfg = tol.apply(spec.tolerances.unwrap_or_default())?;
    let s = build_envelope(&spec, &cfg)?;
    let rows: Vec<&EnvelopePoint> = s.points.iter().filter(|p| a.include_rejected || p.accepted).collect();
    let csv = points_csv(rows.iter().copied())?;
    if let Some(p) = &spec.output.json {
        let mut text = serde_json::to_string_pretty(&s).expect("surface serializes");
        text.push('\n');
        write_atomic(p, text.as_bytes())?;
    }
    let accepted = s.accepted().count();
    match &spec.output.csv {
        Some(p) => {
            write_atomic(p, &csv)?;
            let summary = EnvelopeSummary {
                source: &s.source,
                points: s.points.len(),
                accepted,
                skipped: s.diagnostics.skipped.len(),
                csv: Some(p.display().to_string()),
            };
            emit(out, &json_line(&summary))?;
        }
        None => out.write_all(&csv).map_err(|e| CliError::io(Path::new("<stdout>"), e))?,
    }
    Ok(if accepted > 0 { 0 } else { 1 })
}

#[derive(Serialize)]
struct Verdict<T: Serialize> {
    check: &'static str,
    passed: bool,
    tolerance: f64,
    report: T,
}

fn grid_or_points(a: &VerifyArgs) -> CliResult<Vec<Point2>> {
    if let Some(p) = &a.points {
        return Ok(read_rows(p)?.into_iter().map(|r| [r.x, r.y]).collect());
    }
    let (Some(xr), Some(yr)) = (&a.x_range, &a.y_range) else {
        return Err(CliError::usage("give --points or both --x-range and --y-range"));
    };
    let xs = parse_range(xr)?;
    let ys = parse_range(yr)?;
    Ok(xs.iter().flat_map(|&x| ys.iter().map(move |&y| [x, y])).collect())
}

fn verdict<T: Serialize>(out: &mut dyn Write, check: &'static str, passed: bool, tolerance: f64, report: T) -> CliResult<i32> {
    emit(out, &json_line(&Verdict { check, passed, tolerance, report }))?;
    Ok(if passed { 0 } else { 1 })
}

fn residual_passes(r: &ResidualReport, tol: f64) -> bool {
    r.n_evaluated > 0 && r.max_abs <= tol
}

fn cmd_verify(a: &VerifyArgs, tol: &TolArgs, out: &mut dyn Write) -> CliResult<i32> {
    let cfg = tol.apply(ToleranceConfig::default())?;
    if let Some(src) = &a.implicit {
        let surface = ImplicitLevelSet::from_expr(&expr_in(src, &["x", "y", "z"])?).map_err(CliError::spec)?;
        let Some(path) = &a.points else {
            return Err(CliError::usage("--implicit needs --points"));
        };
        let cloud: Vec<Point3> = read_surface(path)?.cloud();
        return match a.check.unwrap_or(CheckKind::Membership) {
            CheckKind::Membership => {
                let t = a.tol.unwrap_or(cfg.residual_tol);
                let r = implicit_membership(&surface, &cloud);
                let ok = residual_passes(&r, t) && r.n_skipped == 0;
                verdict(out, "membership", ok, t, r)
            }
            CheckKind::Clairaut => {
                let t = a.tol.unwrap_or(PDE_TOL);
                let r = clairaut_report_implicit(&surface, &cloud, &cfg)?;
                verdict(out, "clairaut", residual_passes(&r, t), t, r)
            }
            other => Err(CliError::usage(format!("check {other:?} needs an explicit surface"))),
        };
    }
    let Some(src) = &a.explicit else {
        return Err(CliError::usage("give --implicit or --explicit"));
    };
    let pts = grid_or_points(a)?;
    let xs = bounds(&pts.iter().map(|p| p[0]).collect::<Vec<_>>());
    let ys = bounds(&pts.iter().map(|p| p[1]).collect::<Vec<_>>());
    if pts.is_empty() {
        return Err(CliError::usage("no sample points"));
    }
    // a margin keeps every sample strictly inside for the difference stencils
    let pad = |b: [f64; 2]| {
        let m = cfg.step_at(b[0].abs().max(b[1].abs())) * 2.0;
        Interval::new(b[0] - m, b[1] + m)
    };
    let graph = ExplicitGraph::from_expr(&expr_in(src, &["x", "y"])?, Rect::new(pad(xs), pad(ys))).map_err(CliError::spec)?;
    let t = a.tol.unwrap_or(PDE_TOL);
    match a.check.unwrap_or(CheckKind::Clairaut) {
        CheckKind::Clairaut => {
            let r = clairaut_report_explicit(&graph, &pts, None, &cfg);
            verdict(out, "clairaut", residual_passes(&r, t) && r.n_skipped == 0, t, r)
        }
        CheckKind::Euler => {
            let mut worst: f64 = 0.0;
            let mut at = pts[0];
            for p in &pts {
                let e = euler_residual(&graph, a.degree, *p, &cfg)?.abs();
                if !(e <= worst) {
                    worst = e;
                    at = *p;
                }
            }
            let report = serde_json::json!({ "degree": a.degree, "max_abs": worst, "worst_point": at, "n_evaluated": pts.len() });
            verdict(out, "euler", worst <= t, t, report)
        }
        CheckKind::Homogeneity => {
            let g = ExplicitGraph { domain: Rect::new(Interval::new(xs[0], xs[1]), Interval::new(ys[0], ys[1])), ..graph };
            let r = homogeneity_check(&g, a.degree, 10, &[0.5, 2.0, 3.0])?;
            let t = a.tol.unwrap_or(1e-12);
            verdict(out, "homogeneity", r.max_rel_error <= t, t, r)
        }
        CheckKind::Membership => Err(CliError::usage("membership needs an implicit surface")),
    }
}

fn cmd_classify(a: &ClassifyArgs, tol: &TolArgs, out: &mut dyn Write) -> CliResult<i32> {
    let cfg = tol.apply(ToleranceConfig::default())?;
    if let Some(curve) = &a.curve {
        let fa = fn1_from_expr(&expr_in(&curve[0], &["t"])?, "t").map_err(CliError::spec)?;
        let fb = fn1_from_expr(&expr_in(&curve[1], &["t"])?, "t").map_err(CliError::spec)?;
        let g: CurveFn = Arc::new(move |t| Ok([fa(t)?, fb(t)?]));
        let t0 = a.t0.expect("clap enforces --t0");
        emit(out, &json_line(&classify_curve_point(&g, t0, &cfg)?))?;
        return Ok(0);
    }
    let (Some(fam), Some(path)) = (&a.family, &a.candidates) else {
        return Err(CliError::usage("give --family with --candidates, or --curve with --t0"));
    };
    let f = fn3_from_expr(&expr_in(fam, &["x", "y", "a"])?, ["x", "y", "a"]).map_err(CliError::spec)?;
    let mut cands = Vec::new();
    for (i, r) in read_rows(path)?.into_iter().enumerate() {
        let a = r.a.or(r.param).ok_or_else(|| CliError::usage(format!("row {} has no a or param column", i + 1)))?;
        cands.push(([r.x, r.y], a));
    }
    let labels = classify_locus(&f, &cands, &cfg)?;
    for l in &labels {
        emit(out, &json_line(l))?;
    }
    Ok(0)
}

fn cmd_cross_section(a: &CrossSectionArgs, out: &mut dyn Write) -> CliResult<i32> {
    let s = read_surface(&a.points)?;
    let (section, dropped) = cross_section_z1(&s, a.eps)?;
    let csv = section_csv(&section)?;
    match &a.out {
        Some(p) => {
            write_atomic(p, &csv)?;
            emit(out, &json_line(&serde_json::json!({ "points": section.len(), "dropped": dropped, "csv": p })))?;
        }
        None if !a.witness => out.write_all(&csv).map_err(|e| CliError::io(Path::new("<stdout>"), e))?,
        None => {}
    }
    if a.witness {
        let w = detect_multivalued(&section, a.angle_tol, a.radius_sep);
        emit(out, &json_line(&serde_json::json!({ "witness": w })))?;
    }
    Ok(0)
}

fn out_dir(a: &CatalogArgs) -> Option<PathBuf> {
    a.out_dir.clone().or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
}

/// Write `<name>.json` and one `<name>_<surface>.csv` per cloud.
pub fn write_artifacts(dir: &Path, r: &EntryReport) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut text = serde_json::to_string_pretty(r).expect("reports serialize");
    text.push('\n');
    write_atomic(&dir.join(format!("{}.json", r.name)), text.as_bytes())?;
    for c in &r.clouds {
        let csv = points_csv(c.surface.points.iter())?;
        write_atomic(&dir.join(format!("{}_{}.csv", r.name, c.name)), &csv)?;
    }
    Ok(())
}

fn cmd_catalog(a: &CatalogArgs, tol: &TolArgs, out: &mut dyn Write) -> CliResult<i32> {
    let cfg = tol.apply(ToleranceConfig::default())?;
    if a.list {
        for n in catalog::list() {
            emit(out, n)?;
        }
        return Ok(0);
    }
    let names: Vec<&str> = match (&a.run, a.run_all) {
        (Some(n), _) => {
            if !catalog::list().contains(&n.as_str()) {
                return Err(CliError::spec(Error::UnknownEntry(n.clone())));
            }
            vec![n.as_str()]
        }
        (None, true) => catalog::list().to_vec(),
        (None, false) => return Err(CliError::usage("give --list, --run <name> or --run-all")),
    };
    if a.generator != DEFAULT_GENERATOR {
        catalog::euler_generator_expr(&a.generator).map_err(CliError::spec)?;
    }
    let dir = out_dir(a);
    let mut all_passed = true;
    for n in names {
        let r = catalog::run_with(n, &a.generator, &cfg)?;
        let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        let status = if r.passed { "PASS" } else { "FAIL" };
        let mut line = format!("{status} {} ({}/{} checks)", r.name, r.checks.len() - failed.len(), r.checks.len());
        if !failed.is_empty() {
            line.push_str(&format!(" failed: {}", failed.join(", ")));
        }
        emit(out, &line)?;
        all_passed &= r.passed;
        if let Some(d) = &dir {
            write_artifacts(d, &r)?;
        }
    }
    Ok(if all_passed { 0 } else { 1 })
}

/// `true` when a surface point passes the envelope acceptance test.
pub fn accepted(p: &EnvelopePoint, cfg: &ToleranceConfig) -> bool {
    p.family_residual <= cfg.residual_tol && p.stationarity_residual <= STATIONARITY_TOL
}

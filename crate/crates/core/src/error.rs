use thiserror::Error;

use crate::exprlang::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),

    /// A numeric function was evaluated outside the set where it is real and finite.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("root finder did not converge within {0} iterations")]
    MaxIterations(usize),

    #[error("relation has no zero on the sampled grid")]
    NoRoots,

    #[error("{what} = {value} is outside the domain [{lo}, {hi}]")]
    OutOfDomain { what: &'static str, value: f64, lo: f64, hi: f64 },

    #[error("parameter {param} lies within {radius} of excluded value {excluded}")]
    ExcludedParameter { param: f64, excluded: f64, radius: f64 },

    #[error("characteristic direction degenerates at parameter {param}: |(a', b')| = {speed}")]
    DegenerateDirection { param: f64, speed: f64 },

    #[error("point is not on the surface: |F| = {residual}")]
    NotOnSurface { residual: f64 },

    #[error("vertical tangent: |F_z| = {fz} (z is not a local function of x, y)")]
    VerticalTangent { fz: f64 },

    #[error("candidate ({x}, {y}; {param}) is not on the family: |f| = {f}, |df/da| = {fa}")]
    CandidateNotOnFamily { x: f64, y: f64, param: f64, f: f64, fa: f64 },

    #[error("analytic derivative disagrees with finite differences at {at}: {analytic} vs {numeric}")]
    DerivativeMismatch { at: f64, analytic: f64, numeric: f64 },

    #[error("unknown catalog entry '{0}'")]
    UnknownEntry(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Short machine-readable name used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Expr(ExprError::Syntax { .. }) => "syntax",
            Error::Expr(ExprError::UnknownFunction { .. }) => "unknown_function",
            Error::Expr(ExprError::UnboundVariable(_)) => "unbound_variable",
            Error::Expr(ExprError::Domain { .. }) | Error::Domain(_) => "domain",
            Error::NoBracket { .. } => "no_bracket",
            Error::MaxIterations(_) => "max_iterations",
            Error::NoRoots => "no_roots",
            Error::OutOfDomain { .. } => "out_of_domain",
            Error::ExcludedParameter { .. } => "excluded_parameter",
            Error::DegenerateDirection { .. } => "degenerate_direction",
            Error::NotOnSurface { .. } => "not_on_surface",
            Error::VerticalTangent { .. } => "vertical_tangent",
            Error::CandidateNotOnFamily { .. } => "candidate_not_on_family",
            Error::DerivativeMismatch { .. } => "derivative_mismatch",
            Error::UnknownEntry(_) => "unknown_entry",
            Error::InvalidConfig(_) => "invalid_config",
        }
    }

    pub fn is_domain(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Expr(ExprError::Domain { .. }))
    }
}

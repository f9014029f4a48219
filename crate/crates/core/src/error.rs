use thiserror::Error;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("quadrature did not reach tolerance {requested:e} (estimate {estimate:e})")]
    QuadratureFailed { estimate: f64, requested: f64 },

    #[error("query {query} outside the admissible range [{lo}, {hi}]")]
    OutOfRange { query: f64, lo: f64, hi: f64 },

    #[error("point ({x}, {y}) lies outside the field's grid hull")]
    OutsideHull { x: f64, y: f64 },

    #[error("strip width 2l = {width} exceeds 1/H = {limit}")]
    InfeasibleWidth { width: f64, limit: f64 },

    #[error("boundary function is not convex: witness triple ({x0}, {x1}, {x2})")]
    NotConvex { x0: f64, x1: f64, x2: f64 },

    #[error("hypothesis not certified: {reason}")]
    Uncertified { reason: String, witness: Option<f64> },

    #[error("newton iteration failed at H = {curvature} after {iterations} iterations (residual {residual:e})")]
    Diverged {
        curvature: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("linear system is not positive definite at pivot {pivot}")]
    NotPositiveDefinite { pivot: usize },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid path: {0}")]
    Path(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and positive",
        })
    }
}

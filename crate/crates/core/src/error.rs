use thiserror::Error;

use crate::family::Side;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used to map failures onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// A standing hypothesis on the family (repelling orbits, Collet–Eckmann
    /// growth, boundary conditions) is violated.
    Hypothesis,
    /// A numerical routine failed to converge or certify its output.
    Numerical,
    /// Bad input: configuration, arguments, parameter outside its window.
    Config,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter t = {t} outside window [{lo}, {hi}]")]
    OutsideWindow { t: f64, lo: f64, hi: f64 },

    #[error("point x = {0} outside [-1, 1]")]
    OutsideInterval(f64),

    #[error("inverse of the motion did not converge at x = {0}")]
    InverseMotion(f64),

    #[error("family violates its hypotheses: {0}")]
    InvalidFamily(String),

    #[error("invalid motion: {0}")]
    InvalidMotion(String),

    #[error("Schwarzian derivative is undefined at the critical point x = {0}")]
    AtCriticalPoint(f64),

    #[error("log|f'| undefined: derivative vanishes at x = {0}")]
    ZeroDerivative(f64),

    #[error("non-finite value while computing {0}")]
    NonFinite(&'static str),

    #[error("total variation of {what} did not settle under grid refinement ({coarse} vs {fine})")]
    Variation { what: &'static str, coarse: f64, fine: f64 },

    #[error("y = {y} lies outside the image of branch {side}")]
    OutsideBranchImage { side: Side, y: f64 },

    #[error("refinement of periodic orbit {itinerary} failed (residual {residual:e})")]
    OrbitRefinement { itinerary: String, residual: f64 },

    #[error("non-repelling periodic orbit: period {period}, itinerary {itinerary}, points {points:?}, multiplier {multiplier}")]
    NonRepelling { period: usize, itinerary: String, points: Vec<f64>, multiplier: f64 },

    #[error("superstable critical orbit: f^{n}(c) lands on the critical point")]
    Superstable { n: usize },

    #[error("hyperbolicity estimate {name} = {value} is not > 1")]
    WeakHyperbolicity { name: &'static str, value: f64 },

    #[error("orbit continuation stopped at t = {t}: {reason}")]
    Continuation { t: f64, reason: String },

    #[error("truncated 1/zeta has no zero in (0, {radius})")]
    NoZero { radius: f64 },

    #[error("leading zero z0 = {z0} is not certified simple: |d'(z0)| = {derivative:e}, |d(z0)| = {residual:e}")]
    NotSimple { z0: f64, derivative: f64, residual: f64 },

    #[error("power iteration did not converge after {iterations} iterations (contraction estimate {gap:.6})")]
    NoConvergence { iterations: usize, gap: f64 },

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("operation requires a conjugated family")]
    NotConjugated,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidFamily(_)
            | Error::NonRepelling { .. }
            | Error::Superstable { .. }
            | Error::WeakHyperbolicity { .. } => ErrorClass::Hypothesis,
            Error::OutsideWindow { .. }
            | Error::OutsideInterval(_)
            | Error::InvalidMotion(_)
            | Error::NotConjugated
            | Error::InvalidArgument(_)
            | Error::Config(_) => ErrorClass::Config,
            _ => ErrorClass::Numerical,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

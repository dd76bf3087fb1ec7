use thiserror::Error;

/// Errors raised by the operator, certification and replay machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("fractional order s = {0} must lie in the open interval (0, 1)")]
    InvalidOrder(f64),

    #[error("direction has norm {norm}, expected a unit vector")]
    InvalidDirection { norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("divergent tail: growth exponent {exponent} is not below 2s = {two_s}")]
    DivergentTail {
        exponent: f64,
        two_s: f64,
        /// Sign of the divergence when it is determined (`-1.0` or `1.0`).
        sign: Option<f64>,
    },

    #[error("field is not finite at r = {r} (point {point:?})")]
    NonFiniteField { r: f64, point: Vec<f64> },

    #[error("field is not smooth at {point:?}; the near-origin segment cannot be bounded")]
    NotSmooth { point: Vec<f64> },

    #[error("quadrature did not converge: residual {residual:e} exceeds tolerance {tolerance:e}")]
    QuadratureNonConvergence { residual: f64, tolerance: f64 },

    #[error("declared growth bound violated at {point:?}: |u| = {value}, bound {bound}")]
    GrowthViolation { point: Vec<f64>, value: f64, bound: f64 },

    #[error("certification failed at {point:?}: sampled value {value} exceeds constant {bound}")]
    CertificationFailure { point: Vec<f64>, value: f64, bound: f64 },

    #[error("precondition of lemma {lemma} fails at {point:?}: {reason}")]
    PreconditionFailure {
        lemma: String,
        point: Vec<f64>,
        reason: String,
    },

    #[error("search radius exceeds {limit:e}: the majorant stays above w1(x0) (kappa too close to gamma)")]
    SearchRadius { limit: f64 },

    #[error("unstable time step: {0}")]
    Stability(String),
}

pub type Result<T> = std::result::Result<T, Error>;

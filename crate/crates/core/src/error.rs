use thiserror::Error;

/// Errors raised by the library. Every message names the precondition that
/// was violated so command-line users can act on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate polytope: {0} (triangulate/barycenter require a full-dimensional polytope)")]
    DegeneratePolytope(String),

    #[error("degenerate simplex: vertices are affinely dependent (determinant of the edge matrix is zero)")]
    DegenerateSimplex,

    #[error("unbounded or empty polytope: {0}")]
    UnboundedPolytope(String),

    #[error("inconsistent polytope representation: {0}")]
    InconsistentRepresentation(String),

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: String,
    },

    #[error("unsupported moment order {0}: orders above 4 are not supported")]
    UnsupportedOrder(usize),

    #[error("invalid piecewise-linear function: {0}")]
    InvalidPlFunction(String),

    #[error("nonpositive scale a = {0}: rescaling requires a > 0")]
    NonpositiveScale(String),

    #[error("missing torus weights: {0}")]
    MissingTorusWeights(String),

    #[error("missing level: degree {0} is not stored in the filtration")]
    MissingLevel(u32),

    #[error("invalid filtration level: {0}")]
    InvalidFiltration(String),

    #[error("not a basis: the {0} supplied vectors do not span the level")]
    NotABasis(usize),

    #[error("invalid weight filtration: {0}")]
    InvalidWeightFiltration(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("negative support: lambda_min = {0} < 0, but a valuation-type measure supported in [0, inf) is required")]
    NegativeSupport(f64),

    #[error("inconsistent decomposition: sum of component Q_i = {sum} differs from Q = {total}")]
    InconsistentDecomposition { sum: f64, total: f64 },

    #[error("insufficient degrees: {have} stored, at least {need} required for the polynomial fit")]
    InsufficientDegrees { have: usize, need: usize },

    #[error("origin not interior: {0} (properness requires 0 strictly inside the projected polytope)")]
    OriginNotInterior(String),

    #[error("no convergence after {iterations} iterations (gradient norm {grad_norm:e})")]
    NonConvergence { iterations: usize, grad_norm: f64 },

    #[error("affine objective: the measure is a Dirac mass, f(a) = a * ({slope}) has no interior minimum")]
    DiracMeasure { slope: f64 },

    #[error("no interior minimum: {0}")]
    NoInteriorMinimum(String),

    #[error("denominator vanishes: s*x + (1-s)*A <= 0 at s = {s}, x = {x}")]
    DenominatorVanishes { s: f64, x: f64 },

    #[error("invalid volume function: {0} (must be non-increasing with vol(0) <= V_g)")]
    InvalidVolumeFunction(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for malformed input (as opposed to a mathematical precondition failure).
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Parse(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

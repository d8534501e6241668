use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the solvers and constructors.
///
/// Variants split into two families that the CLI maps to different exit
/// codes: input problems ([`Error::is_validation`]) and numerical failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("space must contain at least one element")]
    EmptySpace,

    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),

    #[error("invalid weight {value} at index {index}")]
    InvalidWeight { index: usize, value: f64 },

    #[error("zero total mass")]
    ZeroMass,

    #[error("measure is not normalized (total mass {0})")]
    NotNormalized(f64),

    #[error("utility has no non-excluded entry")]
    AllExcluded,

    #[error("row {0} has no admissible entry")]
    EmptyRow(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid must be strictly increasing (violated at position {0})")]
    InvalidGrid(usize),

    #[error("constraint {requested} below the minimum {minimum}")]
    Infeasible { requested: f64, minimum: f64 },

    #[error("target {requested} above the maximum attainable {maximum}")]
    Unreachable { requested: f64, maximum: f64 },

    #[error("functional has no strictly convex dual; use the total-variation LP path")]
    NotStrictlyConvex,

    #[error("conditioning atom {0} has zero probability")]
    ZeroConditioning(usize),

    #[error("enumeration of {count} maps exceeds the limit {limit}")]
    EnumerationLimit { count: f64, limit: u64 },

    #[error("fixed point did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("divergent partition sum")]
    Divergent,

    #[error("insufficient quadrature extent: mass deficit {0:e}")]
    InsufficientExtent(f64),

    #[error("numerical invariant violated: {0}")]
    Numerical(String),
}

impl Error {
    /// True for errors caused by malformed or out-of-domain input.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Infeasible { .. }
                | Error::Unreachable { .. }
                | Error::NoConvergence { .. }
                | Error::Divergent
                | Error::InsufficientExtent(_)
                | Error::Numerical(_)
        )
    }
}

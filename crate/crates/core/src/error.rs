use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("point {index} lies outside the domain [-{half_width}, {half_width}]^d")]
    OutsideDomain { index: usize, half_width: f64 },

    #[error("class {0} has no members under the labeling")]
    EmptyClass(usize),

    #[error("bandwidth schedule violates {condition}: beta = {beta} (limit {limit})")]
    Schedule {
        condition: &'static str,
        beta: f64,
        limit: f64,
    },

    #[error("component {component} of class {class} has negligible mass inside the domain")]
    NegligibleMass { class: usize, component: usize },

    #[error("rejection sampling gave up after {0} attempts for a single point")]
    RejectionCap(usize),

    #[error("{what}: n = {n} exceeds the limit of {limit}")]
    TooLarge { what: &'static str, n: usize, limit: usize },

    #[error("row {0} has zero degree")]
    ZeroDegree(usize),

    #[error("matrix is not symmetric: |m[{row}][{col}] - m[{col}][{row}]| = {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("eigensolver did not converge for eigenvalue {0}")]
    NoConvergence(usize),

    #[error("k = {k} exceeds the number of distinct points ({distinct})")]
    TooFewDistinct { k: usize, distinct: usize },

    #[error("{0} is not supported in this dimension")]
    UnsupportedDimension(&'static str),

    #[error("malformed csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Failures of the numerics themselves, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ZeroDegree(_) | Error::NoConvergence(_) | Error::RejectionCap(_) | Error::NegligibleMass { .. }
        )
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

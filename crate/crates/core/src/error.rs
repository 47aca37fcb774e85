use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QmiError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry in {0}")]
    NonFinite(String),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("invalid tolerance configuration: {0}")]
    InvalidTolerance(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is not in the admissible class: {0}")]
    NotAdmissible(String),
    #[error("matrix is not a member of the solution set")]
    NotAMember,
    #[error("matrix is singular: {0}")]
    Singular(String),
    #[error("no witness exists: {0}")]
    NoWitness(String),
    #[error("operation not applicable: {0}")]
    Inapplicable(String),
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("solver could not decide feasibility (best margin {best:e}, upper bound {upper:e})")]
    Indeterminate { best: f64, upper: f64 },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing entry `{0}`")]
    Missing(String),
}

pub type Result<T> = std::result::Result<T, QmiError>;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid dimension n={got}: need n >= {min}")]
    InvalidDimension { got: usize, min: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is not in so(n,1): residual {0:e}")]
    NotInAlgebra(f64),
    #[error("matrix is not in SO(n,1): residual {0:e}")]
    NotInGroup(f64),
    #[error("principal logarithm undefined: eigenvalue {0} on the closed negative real axis")]
    BranchCut(f64),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pole encountered: {0}")]
    Pole(String),
    #[error("parity violation: m={m}, l={l} (m-l must be even and |l| <= m)")]
    Parity { m: usize, l: i64 },
    #[error("parameter out of range: {0}")]
    Range(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

use std::path::PathBuf;

use num_complex::Complex64;

/// Errors produced by the reduction pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("constraint matrix is rank deficient: estimated rank {rank} < {n2}")]
    ConstraintDegenerate { rank: usize, n2: usize },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("shift {alpha} lies on (or numerically at) a pole: rcond estimate {rcond:.3e}")]
    ShiftAtEigenvalue { alpha: Complex64, rcond: f64 },

    #[error("solve failed at shift index {index}: {source}")]
    ShiftSolve {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("basis collapse while orthonormalizing column {column} (duplicate shifts?)")]
    BasisCollapse { column: usize },

    #[error("first-order embedding needs nonsingular reduced mass matrix")]
    SingularReducedMass,

    #[error("pencil is not asymptotically stable: eigenvalue {0} has non-negative real part")]
    Unstable(Complex64),

    #[error("numerical rank {found} differs from expected {expected}")]
    Rank { expected: usize, found: usize },

    #[error("dense oracle refused: n1 = {n1} exceeds cap {cap}")]
    DenseCap { n1: usize, cap: usize },

    #[error("transfer function evaluated at a pole (s = {0})")]
    Pole(Complex64),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("eigenvalue problem failed: {0}")]
    Eigen(String),

    #[error("matrix market parse error in {path:?} line {line}: {msg}")]
    MatrixMarket {
        path: Option<PathBuf>,
        line: usize,
        msg: String,
    },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

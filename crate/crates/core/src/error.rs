use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (residual {residual:.3e} exceeds {tol:.3e})")]
    NotHermitian { residual: f64, tol: f64 },

    #[error("eigensolver did not converge for a {dim}x{dim} matrix")]
    NoConvergence { dim: usize },

    #[error("matrix function undefined: eigenvalue {eigenvalue:.3e} below positivity floor {floor:.3e}")]
    SingularInput { eigenvalue: f64, floor: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("reference state is not faithful: min/max eigenvalue ratio {ratio:.3e} below {tol:.3e}")]
    NotFaithful { ratio: f64, tol: f64 },

    #[error("filter weight too large: p*||a^dag a|| = {0:.6} > 1")]
    WeightTooLarge(f64),

    #[error("negative time {0} for a semigroup")]
    NegativeTime(f64),

    #[error("time {0} is not a whole number of steps for a one-shot map")]
    NonIntegerStep(f64),

    #[error("Bohr frequencies cannot be separated at binning tolerance {tol:.3e} (gap {gap:.3e})")]
    DegenerateBinning { gap: f64, tol: f64 },

    #[error("rate family violates the KMS relation at frequency {nu}: residual {residual:.3e}")]
    KmsViolation { nu: f64, residual: f64 },

    #[error("preparation has no assignment rule for the reduced dynamics")]
    UnsupportedAssignment,

    #[error("generator fails detailed balance (self-adjointness {self_adjoint:.3e}, commutation {commutation:.3e})")]
    NotDetailedBalance { self_adjoint: f64, commutation: f64 },

    #[error("spectral gap is not a valid decay certificate")]
    InvalidGap,

    #[error("modular flow is not trivial on the encoded algebra (residual {0:.3e})")]
    ModularNotTrivialOnQ(f64),

    #[error("{what} has imaginary residue {residue:.3e}")]
    ImaginaryResidue { what: &'static str, residue: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },

    #[error("invariant violation: {}", .0.join(", "))]
    InvariantViolation(Vec<String>),

    #[error("unknown parameter path `{0}`")]
    UnknownParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

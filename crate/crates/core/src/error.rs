use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("interpolation residual {residual:.3e} exceeds tolerance {tol:.1e}; try a larger grid or another radius")]
    Interpolation { residual: f64, tol: f64 },
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("singular matrix at {0}")]
    Singular(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("enumeration guard: {edges} edges exceeds the limit of {limit}")]
    SizeGuard { edges: usize, limit: usize },
    #[error("pattern mismatch: {0}")]
    Pattern(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("ambiguous root tracking: {0}")]
    Ambiguous(String),
}

impl Error {
    /// Numerical failures (as opposed to bad input) — the CLI maps these to exit code 3.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Interpolation { .. }
                | Error::NonConvergence(_)
                | Error::Singular(_)
                | Error::Ambiguous(_)
                | Error::InvalidKernel(_)
        )
    }
}

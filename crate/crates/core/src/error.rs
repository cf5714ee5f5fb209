use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Variants fall into two families, see [`Error::is_validation`]: malformed or
/// assumption-violating inputs, and numerical failures detected while computing.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("identifiability failure for pointer pair ({i}, {j}): {reason}")]
    Identifiability { i: usize, j: usize, reason: String },

    #[error("purely imaginary eigenvalue {re:+e}{im:+e}i; the fast generator has no spectral gap")]
    PurelyImaginaryEigenvalue { re: f64, im: f64 },

    #[error("zero eigenvalue is not semi-simple (algebraic multiplicity {algebraic}, kernel dimension {geometric})")]
    JordanBlock { algebraic: usize, geometric: usize },

    #[error("kernel bases are not biorthogonalizable (Gram condition number {condition:e})")]
    Degeneracy { condition: f64 },

    #[error("restricted generator is numerically singular (condition number {condition:e})")]
    Conditioning { condition: f64 },

    #[error("centering property violated: |P L1 P| = {norm:e} exceeds {tol:e}")]
    Centering { norm: f64, tol: f64 },

    #[error("non-finite state at step {step} (t = {time}); try a smaller step size")]
    BlowUp { step: usize, time: f64 },
}

impl Error {
    /// True for input/assumption problems, false for numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidInput(_)
                | Error::Precondition(_)
                | Error::Identifiability { .. }
                | Error::Centering { .. }
        )
    }

    pub(crate) fn dim(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

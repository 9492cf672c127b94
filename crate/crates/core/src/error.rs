use thiserror::Error;

/// Errors raised while building systems, ensembles or kernel analyses.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed input: bad sector, non-Hermitian coefficients, unknown orbital, ...
    #[error("invalid input `{field}`: {message}")]
    Invalid { field: String, message: String },

    /// The ensemble violates the monotone-weight condition required by the kernel analysis.
    #[error("ensemble is not monotone: {} violating pair(s) (K, L), first {:?}", pairs.len(), pairs.first())]
    NonMonotone { pairs: Vec<(usize, usize)> },

    /// The Hermitian eigensolver did not converge or its residuals are too large.
    #[error("eigensolver failure: {message} (max residual {max_residual:e})")]
    Eigensolver { message: String, max_residual: f64 },

    /// The time grid does not resolve the fastest excitation frequency.
    #[error("time grid under-resolved: {n_steps} steps given, at least {required} required")]
    UnderResolved { n_steps: usize, required: usize },
}

impl Error {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

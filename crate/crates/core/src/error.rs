use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Two points closer than the kernel's distance floor.
    #[error("distance underflow between vortices {i} and {j}: |x_i - x_j| = {distance:e}")]
    DistanceUnderflow { i: usize, j: usize, distance: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("Gauss constraint violated: sum of strengths = {sum:e} (tolerance {tol:e})")]
    GaussViolation { sum: f64, tol: f64 },

    #[error("eigenvalue iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("caps around vortices {i} and {j} overlap at radius {eps}")]
    OverlappingCaps { i: usize, j: usize, eps: f64 },

    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code: 1 for validation failures, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DistanceUnderflow { .. } | Error::NoConvergence { .. } => 2,
            _ => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_separate_numerical_from_validation_failures() {
        assert_eq!(
            Error::DistanceUnderflow {
                i: 0,
                j: 1,
                distance: 0.0
            }
            .exit_code(),
            2
        );
        assert_eq!(Error::NoConvergence { iterations: 10 }.exit_code(), 2);
        assert_eq!(Error::invalid("dt", "must be positive").exit_code(), 1);
        assert_eq!(
            Error::GaussViolation {
                sum: 0.5,
                tol: 1e-12
            }
            .exit_code(),
            1
        );
    }
}

use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which iteration failed to converge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Primal,
    Tangent,
    Adjoint,
    Newton,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::Primal => "primal",
            Phase::Tangent => "tangent",
            Phase::Adjoint => "adjoint",
            Phase::Newton => "newton",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {lhs} vs {rhs}")]
    Shape {
        op: &'static str,
        lhs: String,
        rhs: String,
    },

    #[error("{op} requires {requirement}, got {got}")]
    Dimension {
        op: &'static str,
        requirement: &'static str,
        got: String,
    },

    #[error("matrix is not symmetric (relative Frobenius asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("linear solve failed: matrix is singular")]
    Singular,

    #[error("hessian is not positive definite at iterate {iterate:?}")]
    NotPositiveDefinite { iterate: Vec<f64> },

    #[error("newton step failed at iterate {iterate:?}: {source}")]
    NewtonStep {
        iterate: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("{phase} iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        phase: Phase,
        iterations: usize,
        residual: f64,
    },

    #[error("reverse sweep requested for tag {expected} on a value that is not recorded under it")]
    TagMismatch { expected: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("malformed array file: {0}")]
    Format(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn shape(op: &'static str, lhs: impl fmt::Display, rhs: impl fmt::Display) -> Self {
        Error::Shape {
            op,
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

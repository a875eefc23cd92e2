use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid problem data: {0}")]
    InvalidProblem(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("interior point method did not converge after {iterations} iterations (stationarity {stationarity:.3e}, primal {primal:.3e}, complementarity {complementarity:.3e})")]
    NotConverged {
        iterations: usize,
        stationarity: f64,
        primal: f64,
        complementarity: f64,
    },

    #[error("singular linear system in {0}")]
    Singular(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("relative regret undefined: |c^T x*(c)| = {denominator:.3e} is below tolerance")]
    UndefinedRelativeRegret { denominator: f64 },

    #[error("data error at line {line}: {message}")]
    Data { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            actual,
        })
    }
}

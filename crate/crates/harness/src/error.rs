use thiserror::Error;

/// Failures surfaced by the CLI. The exit code separates bad input from
/// numerical trouble so scripted sweeps can tell them apart.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_) | HarnessError::Io(_) => 1,
            HarnessError::Numerical(_) => 2,
        }
    }
}

impl From<dflrb_core::Error> for HarnessError {
    fn from(e: dflrb_core::Error) -> Self {
        use dflrb_core::Error as E;
        match e {
            E::NotConverged { .. }
            | E::Singular(_)
            | E::NonFinite(_)
            | E::UndefinedRelativeRegret { .. } => HarnessError::Numerical(e.to_string()),
            E::Io(msg) => HarnessError::Io(msg),
            E::Dimension { .. } | E::InvalidProblem(_) | E::InvalidConfig(_) | E::Data { .. } => {
                HarnessError::Config(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Config(e.to_string())
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

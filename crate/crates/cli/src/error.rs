use hyperperiodic::Error;
use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Diverged(String),
}

/// Exit status of the process for a library error.
fn core_code(e: &Error) -> u8 {
    match e {
        Error::AssumptionsViolated(_) => 2,
        Error::Resonant(_)
        | Error::NearResonance { .. }
        | Error::Singular
        | Error::NonFinite(_)
        | Error::OutOfRange { .. } => 3,
        Error::TooLarge { .. } => 4,
        Error::SweepInstance { source, .. } => core_code(source),
        Error::Parse { .. }
        | Error::Eval { .. }
        | Error::InvalidGrid { .. }
        | Error::ShapeMismatch { .. }
        | Error::InvalidProblem(_)
        | Error::TimeDependent(_)
        | Error::Manufacture(_) => 1,
    }
}

impl CliError {
    /// 1 configuration, 2 standing assumptions, 3 resonance or divergence,
    /// 4 size guard.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Core(e) => core_code(e),
            CliError::Diverged(_) => 3,
        }
    }
}

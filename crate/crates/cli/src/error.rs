use std::process::ExitCode;

use grassmann_holonomy::GeomError;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or configuration; exit 1.
    Usage(String),
    /// A check or invariant failed; exit 2.
    Invariant(String),
    /// `NotClosed` or `GapTooSmall`; exit 3.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 1,
            CliError::Invariant(_) => 2,
            CliError::Numerical(_) => 3,
        })
    }

    /// Classifies an error raised while setting up a run from the config.
    pub fn setup(e: GeomError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "usage error: {s}"),
            CliError::Invariant(s) => write!(f, "invariant failure: {s}"),
            CliError::Numerical(s) => write!(f, "numerical condition: {s}"),
        }
    }
}

impl From<GeomError> for CliError {
    fn from(e: GeomError) -> Self {
        match e {
            GeomError::NotClosed { residual } => {
                CliError::Numerical(format!("path is not closed, closure residual {residual:e}"))
            }
            GeomError::GapTooSmall { .. } => CliError::Numerical(e.to_string()),
            GeomError::InvalidTolerances(_) | GeomError::InvalidGrid(_) | GeomError::DimensionTooSmall { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Invariant(other.to_string()),
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

/// Process exit status for each error class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const INVARIANT: i32 = 3;
    pub const CONVERGENCE: i32 = 4;
    pub const IO: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {pointer}: {message}")]
    Config { pointer: String, message: String },

    #[error("model validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] charwave_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use charwave_core::Error as E;
        match self {
            CliError::Config { .. } | CliError::Validation(_) => exit::CONFIG,
            CliError::Io { .. } => exit::IO,
            CliError::Core(e) => match e {
                E::UnknownModel { .. }
                | E::UnsupportedRegime { .. }
                | E::InvalidInput(_)
                | E::SpeedPositivity { .. }
                | E::NotApplicable(_) => exit::CONFIG,
                E::FixedPointDivergence { .. } | E::Quadrature { .. } | E::MonotoneInversion { .. } => {
                    exit::CONVERGENCE
                }
                E::NumericalDomain { .. }
                | E::InvariantViolation { .. }
                | E::Compatibility { .. }
                | E::Support(_)
                | E::Window(_)
                | E::DegenerateSamples(_)
                | E::PreBlowupOnly { .. }
                | E::Stability { .. } => exit::INVARIANT,
            },
        }
    }
}

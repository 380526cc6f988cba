use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in {field}: {message}")]
    Config { field: String, message: String },

    #[error("input data error: {0}")]
    Input(String),

    /// A fit that did not converge or a calibration that failed.
    #[error("{0}")]
    Failure(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Input(_) | Self::Io(_) => 3,
            Self::Failure(_) => 4,
        }
    }

    /// Classifies a library error raised while processing input data.
    pub fn from_data(err: polsqueeze::Error) -> Self {
        use polsqueeze::Error as E;
        match err {
            E::FitNotConverged { .. } | E::Calibration(_) => Self::Failure(err.to_string()),
            other => Self::Input(other.to_string()),
        }
    }

    /// Classifies a library error raised from configured parameters.
    pub fn from_model(err: polsqueeze::Error) -> Self {
        use polsqueeze::Error as E;
        match err {
            E::FitNotConverged { .. } | E::Calibration(_) => Self::Failure(err.to_string()),
            E::Io(_) => Self::Input(err.to_string()),
            other => Self::Config {
                field: "model".into(),
                message: other.to_string(),
            },
        }
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("Fock cutoff {given} too small for tail tolerance {tolerance:e}; at least {required} is needed")]
    CutoffTooSmall {
        given: usize,
        required: usize,
        tolerance: f64,
    },

    #[error("detection basis is not unitary (deviation {deviation:e})")]
    NonUnitary { deviation: f64 },

    #[error("{0}: mean must be positive")]
    NonPositiveMean(&'static str),

    #[error("not enough data: {what} needs at least {needed}, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("calibration failure: {0}")]
    Calibration(String),

    #[error("wavelength {wavelength_nm} nm is outside the validity range {min_nm}..{max_nm} nm of {table}")]
    WavelengthOutOfRange {
        wavelength_nm: f64,
        min_nm: f64,
        max_nm: f64,
        table: &'static str,
    },

    #[error("no phase-matched region on the grid (peak sinc^2 = {peak:.3e}); adjust the cut angle")]
    NoPhaseMatching { peak: f64 },

    #[error("fit did not converge after {iterations} iterations (cost {cost:e}); trace: {trace}")]
    FitNotConverged {
        iterations: usize,
        cost: f64,
        trace: String,
    },

    #[error("invalid fit problem: {0}")]
    InvalidProblem(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}

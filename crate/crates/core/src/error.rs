use thiserror::Error;

/// Errors raised by the kinematics, dynamics and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    /// The scissor mechanism cannot assume the requested configuration.
    #[error("mechanism domain error: {0}")]
    Domain(String),

    /// `dx/dy` is unbounded at the fold singularity `y = L_L`.
    #[error("extension jacobian is singular at y = {y} (half link length {half_link_length})")]
    Singularity { y: f64, half_link_length: f64 },

    /// Link geometry could not be derived from the requested envelope.
    #[error("calibration error: {0}")]
    Calibration(String),

    /// A scenario or configuration value is invalid. `key` names the offending entry.
    #[error("invalid configuration `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },

    /// A state or input became non-finite.
    #[error("numerical fault at t = {time} s: {what}")]
    NumericalFault { time: f64, what: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl SimError {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        SimError::InvalidConfig {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SimError>;

use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid modulus: {0}")]
    InvalidModulus(String),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("hypothesis violated at t = {t}: {what}")]
    Hypothesis { t: f64, what: String },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn in_stage(self, stage: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}

use thiserror::Error;

/// Errors raised across the library. Non-periodic or inconclusive outcomes are
/// verdicts, not errors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain violation in {component}: {message}")]
    Domain { component: String, message: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("no unique equilibrium: interaction matrix is singular")]
    NoUniqueEquilibrium,

    #[error("range error: {0}")]
    Range(String),

    #[error("step failed at t={time}: newton residual {residual:e} after {iterations} iterations")]
    StepFailure {
        time: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("energy surface unreachable after {attempts} failed draws")]
    SurfaceUnreachable { attempts: usize },

    #[error("degenerate energy surface at E={energy}: {reason}")]
    DegenerateSurface { energy: f64, reason: String },

    #[error("potential is not confining at E={energy}: {reason}")]
    NotConfining { energy: f64, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn domain(component: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Domain {
            component: component.into(),
            message: message.into(),
        }
    }

    pub fn with_context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

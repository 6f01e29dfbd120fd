use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("quaternion is not unit norm (|q| = {norm})")]
    NonUnitQuaternion { norm: f64 },

    #[error("rotation axis is not unit norm (|e| = {norm})")]
    NonUnitAxis { norm: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("inertia tensor lacks the cube-diagonal symmetry: {0}")]
    NotCubeSymmetric(String),

    #[error("Euler-rate map is singular (|sin theta| = {sin_theta:e})")]
    GimbalSingular { sin_theta: f64 },

    #[error("below minimum spin velocity for steady precession (discriminant {discriminant:e})")]
    BelowMinimumSpin { discriminant: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("integration failed at t = {t}: {source}")]
    Integration {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("empty level set: {0}")]
    EmptyLevelSet(String),

    #[error("not enough samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("unknown config key `{key}` at line {line}")]
    UnknownKey { key: String, line: usize },

    #[error("bad value for `{key}` at line {line}: {reason}")]
    BadValue { key: String, line: usize, reason: String },

    #[error("unknown scenario `{name}`{}", suggestion.as_ref().map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default())]
    UnknownScenario { name: String, suggestion: Option<String> },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by the user's input rather than by a run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::UnknownKey { .. }
                | Error::BadValue { .. }
                | Error::UnknownScenario { .. }
                | Error::InvalidParameter { .. }
                | Error::NotCubeSymmetric(_)
                | Error::EmptyLevelSet(_)
                | Error::NonUnitQuaternion { .. }
                | Error::Io { .. }
        )
    }

    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

use thiserror::Error;

/// Errors raised by the cam synthesis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid cam profile: {0}")]
    InvalidProfile(String),

    #[error("degenerate tangent at phi = {phi} (rho and rho' both vanish)")]
    DegenerateTangent { phi: f64 },

    #[error("tangency solver did not converge at theta = {theta} rad (residual {residual:.3e})")]
    NonConvergence { theta: f64, residual: f64 },

    #[error("invalid spring geometry: {0}")]
    InvalidGeometry(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("no feasible design found: {0}")]
    NoFeasiblePoint(String),

    #[error("iteration limit reached with constraint violation {violation:.3e}")]
    MaxIterations { violation: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

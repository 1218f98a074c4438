use thiserror::Error;

/// Errors surfaced by every fallible routine in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the routine.
    #[error("domain error in {context}: {detail}")]
    Domain {
        context: &'static str,
        detail: String,
    },

    /// A configuration or input record failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A numerical procedure did not reach its tolerance.
    #[error("numeric failure in {context}: {detail} (best estimate {estimate:e})")]
    Numeric {
        context: &'static str,
        detail: String,
        estimate: f64,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(context: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        context,
        detail: detail.into(),
    }
}

pub(crate) fn ensure_finite(context: &'static str, name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(domain(context, format!("{name} must be finite, got {v}")))
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A rate, size or probability outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Input outside the domain on which an operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("bracket error: {0}")]
    Bracket(String),
    #[error("step-size error: {0}")]
    StepSize(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn ensure_rate(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite and nonnegative, got {value}"
        )))
    }
}

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The phase search could not bring the joint unitary down to the target time.
    #[error("synthesis failure: best achieved duration {achieved:.9} exceeds target {target:.9}")]
    SynthesisFailure { achieved: f64, target: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

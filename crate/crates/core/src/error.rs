//! Error type shared by all simulation modules.

/// Errors raised by encoding, decoding, and simulation operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument was out of range, non-finite, or dimensionally wrong.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A population carried no activity, so no posterior can be decoded.
    #[error("degenerate activity: total population activity is zero")]
    DegenerateActivity,

    /// A grid belief lost all posterior mass.
    #[error("degenerate belief: posterior mass is zero")]
    DegenerateBelief,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

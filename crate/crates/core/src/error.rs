use alloc::string::String;

/// Errors raised by the simulator core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("invalid spike train: {0}")]
    Train(String),

    #[error("input has {found} channels, network expects {expected}")]
    ChannelMismatch { expected: usize, found: usize },

    #[error("model {model} cannot run at compression ratio {gamma}")]
    UnsupportedMode { model: &'static str, gamma: u32 },

    #[error("compression ratio {gamma} outside programmable range 1..={max}")]
    RatioOutOfBounds { gamma: u32, max: u32 },

    #[error("network was built with a fixed compression ratio")]
    NotProgrammable,

    #[error("compression ratio cannot change while an example is in flight")]
    ExampleInFlight,

    #[error("traces do not describe the same neurons")]
    TraceMismatch,

    #[error("{0}")]
    Undefined(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}

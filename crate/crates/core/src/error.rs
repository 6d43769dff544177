use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("d = {d} exceeds the enumeration cap of {cap} features; use restrict_to with the effects of interest")]
    TooManyFeatures { d: usize, cap: usize },

    #[error("invalid effect {indices:?}: {reason}")]
    InvalidEffect { indices: Vec<usize>, reason: String },

    #[error("unknown effect {0}")]
    UnknownEffect(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("orthogonalization iteration {iteration} (level {level}): n = {n} is smaller than the lower-order basis width B = {width}")]
    InsufficientSamples {
        iteration: usize,
        level: usize,
        n: usize,
        width: usize,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("projection basis is empty")]
    EmptyBasis,

    #[error("constant prediction function: denominator variance is zero")]
    ZeroVariance,

    #[error("all {0} ensemble members failed")]
    AllMembersFailed(usize),
}

impl Error {
    /// True for failures of the numerics rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_) | Error::EmptyBasis | Error::ZeroVariance | Error::AllMembersFailed(_)
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

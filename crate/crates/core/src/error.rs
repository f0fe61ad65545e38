use thiserror::Error;

/// Crate-wide error type. Variants are grouped by whether they indicate a
/// precision shortfall (recoverable by raising M or D) or invalid input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid precision profile: {0}")]
    InvalidProfile(String),

    #[error("level {level} too deep: needs T-truncation above {needed}, profile has {available}")]
    LevelTooDeep {
        level: u32,
        needed: usize,
        available: usize,
    },

    #[error("insufficient p-adic precision: quantity vanishes modulo p^{m}")]
    InsufficientPPrecision { m: u32 },

    #[error("insufficient T-adic precision: no unit coefficient below degree {d}")]
    InsufficientTPrecision { d: usize },

    #[error("precision exhausted: pivot not separable from zero below valuation {cap}")]
    PrecisionExhausted { cap: u32 },

    #[error("no integer growth fit: {0}")]
    NoIntegerFit(String),

    #[error("no consistent tower fit: {0}")]
    NoConsistentFit(String),

    #[error("invalid limit module: {0}")]
    InvalidLimit(String),

    #[error("invalid module data: {0}")]
    InvalidModule(String),

    #[error("1+T acts non-invertibly; input is not a module over the completed group ring")]
    NonInvertibleAction,
}

impl Error {
    /// True for errors that signal a precision shortfall rather than bad input.
    pub fn is_precision(&self) -> bool {
        matches!(
            self,
            Error::LevelTooDeep { .. }
                | Error::InsufficientPPrecision { .. }
                | Error::InsufficientTPrecision { .. }
                | Error::PrecisionExhausted { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

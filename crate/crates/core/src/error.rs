use thiserror::Error;

use crate::tower::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    InvalidPrime(u64),
    #[error("invalid exponent {num}/{den} for p = {p}: {reason}")]
    InvalidExponent {
        num: i64,
        den: i64,
        p: u64,
        reason: &'static str,
    },
    #[error("not a unit: {0}")]
    NotAUnit(String),
    #[error("precision insufficient: {0}")]
    PrecisionInsufficient(String),
    #[error("normalization did not stabilize within max_depth {max_depth}; retry with a larger max_depth")]
    NonStabilized { max_depth: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix not in group: {0}")]
    NotInGroup(String),
    #[error("validation failed: {0}")]
    Validation(Violation),
    #[error("triviality criterion not met over {0}")]
    CriterionNotMet(&'static str),
    #[error("diagonal classes do not match: {0}")]
    DiagonalMismatch(String),
    #[error("witness entry is not a Laurent polynomial within precision: {0}")]
    NotLaurent(String),
    #[error("witness verification failed: {0}")]
    VerificationFailed(String),
    #[error("search space too large: {size} candidates exceeds cap {cap}")]
    SearchSpaceTooLarge { size: u128, cap: u128 },
    #[error("unsupported tail: {0}")]
    UnsupportedTail(String),
    #[error("exponent overflow")]
    Overflow,
    #[error("parse error: {0}")]
    Parse(String),
}

use alloc::string::String;
use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid shape: {0}")]
    InvalidShape(&'static str),
    #[error("enumeration over {bits} bits exceeds the budget of {max} bits")]
    BudgetExceeded { bits: usize, max: usize },
    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{0} is empty")]
    Empty(&'static str),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("digit {digit}: need {needed} examples, only {available} available")]
    InsufficientExamples { digit: u8, needed: usize, available: usize },
}

pub(crate) fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension { what, expected, actual })
    }
}

pub(crate) fn check_finite(what: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(index) => Err(Error::NonFinite { what, index }),
    }
}

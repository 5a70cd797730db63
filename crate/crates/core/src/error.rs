use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("{what}: expected length {expected}, got {got}")]
    Length {
        what: &'static str,
        expected: String,
        got: usize,
    },

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("non-invertible input: reconstructed increment {index} is {value}")]
    NonInvertible { index: usize, value: f64 },

    #[error("series did not settle within {cap} terms (partial sum {partial})")]
    Divergence { cap: usize, partial: f64 },

    #[error("tail too short: last {window} terms contribute {contribution:e} > {tolerance:e}")]
    InsufficientTail {
        window: usize,
        contribution: f64,
        tolerance: f64,
    },

    #[error("grid does not cover the kernel mass: boundary mass {mass:e} > {limit:e}")]
    GridCoverage { mass: f64, limit: f64 },

    #[error("normalization integral underflowed ({value:e})")]
    Normalization { value: f64 },

    #[error("cdf is not monotone on the sample range (at {at})")]
    NonMonotoneCdf { at: f64 },

    #[error("only {found} conditioned samples in window, need {needed}")]
    InsufficientMass { found: usize, needed: usize },

    #[error("sample too small: {len} values (need at least {min})")]
    SampleTooSmall { len: usize, min: usize },
}

impl Error {
    /// True for errors caused by the caller's input rather than by a
    /// numerical procedure failing.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. } | Error::Length { .. } | Error::IndexOutOfRange { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        what,
        detail: detail.into(),
    }
}

/// Fails with a domain error unless `value` is finite and strictly positive.
pub(crate) fn require_positive(what: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(domain(what, format!("expected a positive finite value, got {value}")))
    }
}

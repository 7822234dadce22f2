use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precision shortfall: needed {needed} certified digits, got {got}")]
    PrecisionShortfall { needed: usize, got: usize },

    #[error("no finite stationary measure")]
    NoStationaryMeasure,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("branch tolerance too coarse: row sums off by {0:e}")]
    BranchTolerance(f64),

    #[error("power iteration did not converge in {iterations} iterations (lambda {lambda}, residual {residual:e})")]
    NotConverged {
        iterations: usize,
        lambda: f64,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("{} trial(s) aborted after the precision retry cap (first: {})", .trials.len(), .trials[0])]
    TrialsAborted { trials: Vec<u64> },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of the numerics (as opposed to invalid input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::PrecisionShortfall { .. }
                | Error::BranchTolerance(_)
                | Error::NotConverged { .. }
                | Error::TrialsAborted { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

use crate::field::GridSpec;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid mismatch: {left:?} vs {right:?}")]
    Shape { left: GridSpec, right: GridSpec },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("reference field is identically zero")]
    ZeroReference,

    /// A stepper produced NaN or Inf.
    #[error("non-finite state after step {step}{}", slice.map(|p| format!(" of slice {p}")).unwrap_or_default())]
    NonFinite { slice: Option<usize>, step: usize },

    /// Failure inside a Parareal sweep, tagged with iteration `k` (0 = prediction) and slice `p`.
    #[error("iteration {k}, slice {p}: {source}")]
    Sweep {
        k: usize,
        p: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("worker {rank} panicked")]
    WorkerPanic { rank: usize },

    #[error("protocol violation: {0}")]
    Protocol(String),

    /// Worker `p` gave up because another worker failed.
    #[error("worker {p} stopped after another worker failed")]
    Aborted { p: usize },

    #[error("watchdog expired at iteration {k}, slice {p}\n{dump}")]
    Deadlock { k: usize, p: usize, dump: String },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn at(self, k: usize, p: usize) -> Self {
        match self {
            e @ Error::Sweep { .. } => e,
            e => Error::Sweep {
                k,
                p,
                source: Box::new(e),
            },
        }
    }

    /// Picks the most informative of several worker errors: protocol
    /// errors and panics are usually knock-on effects of another failure.
    pub(crate) fn root_cause(errors: Vec<Error>) -> Option<Error> {
        let rank = |e: &Error| match e {
            Error::Aborted { .. } => 4,
            Error::Protocol(_) => 3,
            Error::Deadlock { .. } => 2,
            Error::WorkerPanic { .. } => 1,
            _ => 0,
        };
        errors.into_iter().min_by_key(rank)
    }

    /// True when the root cause is a NaN/Inf blow-up rather than a usage or protocol error.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonFinite { .. } => true,
            Error::Sweep { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

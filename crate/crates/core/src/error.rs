use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("action {action} out of range for {count} actions")]
    ActionOutOfRange { action: usize, count: usize },

    /// A learner update whose step would leave the simplex.
    #[error("step bound violated: {0}")]
    StepBound(String),

    #[error("integration failed at t = {time}: {reason}")]
    Integration { time: f64, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    /// A per-seed failure inside an episode.
    #[error("seed {seed}, step {step}: {source}")]
    Episode {
        seed: u64,
        step: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True when the root cause is a learner step-bound violation.
    pub fn is_learner_violation(&self) -> bool {
        match self {
            Error::StepBound(_) => true,
            Error::Episode { source, .. } => source.is_learner_violation(),
            _ => false,
        }
    }
}

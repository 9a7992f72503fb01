use thiserror::Error;

use crate::grid::VelIndex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The sufficient condition NOR < 1 for the Richardson iteration fails.
    #[error("stability condition violated: NOR = {nor} >= 1 at velocity node {worst}")]
    Stability { nor: f64, worst: VelIndex },

    #[error(
        "{stage} iteration did not converge after {iterations} iterations (last value {last})"
    )]
    NonConvergence {
        stage: &'static str,
        iterations: usize,
        last: f64,
    },

    #[error("time step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfiguration(msg.into())
    }

    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Strips any `Step` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } => source.root(),
            other => other,
        }
    }
}

use thiserror::Error;

use crate::game::SymmetryReport;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("quadrotor pitch {pitch} rad is at the Euler-rate singularity")]
    Singularity { pitch: f64 },

    #[error("time step must be positive, got {0}")]
    InvalidTimeStep(f64),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("rollout diverged at step {step}")]
    DivergedRollout { step: usize },

    #[error("regularized control Hessian is not positive definite at step {step}")]
    NotPositiveDefinite { step: usize },

    #[error("game couplings are not symmetric: {0}")]
    Asymmetric(SymmetryReport),

    #[error("invalid agent index {index} for a game with {agents} agents")]
    AgentIndex { index: usize, agents: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown built-in scenario `{0}`")]
    UnknownScenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            actual,
        })
    }
}

use thiserror::Error;

use crate::particle::ParticleArray;

/// Errors raised by the samplers and their supporting routines.
#[derive(Debug, Error)]
pub enum AbcError {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The user simulator failed. Runs abort on this; a retry would change
    /// the prior-predictive distribution the sampler targets.
    #[error("simulator failed at theta = {theta:?}: {message}")]
    Simulator { theta: Vec<f64>, message: String },

    #[error("simulator returned {got} summaries, model declares {expected}")]
    SummaryLength { expected: usize, got: usize },

    #[error("no particle within tolerance {epsilon} at iteration {iteration}")]
    ScheduleInfeasible { iteration: usize, epsilon: f64 },

    #[error("degenerate particle array: {0}")]
    DegenerateArray(String),

    #[error("budget exceeded after {batches} initialisation batches")]
    BudgetExceeded {
        batches: usize,
        partial: Box<ParticleArray>,
    },

    #[error("acceptance probability is zero")]
    ZeroAcceptProb,

    #[error("empty sample")]
    EmptySample,
}

pub type Result<T, E = AbcError> = std::result::Result<T, E>;

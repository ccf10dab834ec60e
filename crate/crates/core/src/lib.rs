//! Approximate Bayesian computation samplers.
//!
//! The crate provides a rejection sampler, an MCMC-ABC kernel, a
//! fixed-schedule sequential sampler, and a self-calibrated sequential
//! sampler that picks its tolerance levels so that each iteration costs
//! exactly `N` model simulations. A Gaussian-mixture toy model with an
//! analytic posterior is included for validation.
//!
//! All randomness is drawn from counter-based streams ([`rng::Streams`]),
//! so results are reproducible for a given seed regardless of how many
//! rayon worker threads execute the simulations.

pub mod adaptive;
pub mod baseline;
pub mod counter;
pub mod diagnostics;
pub mod error;
pub mod model;
pub mod particle;
pub mod proposal;
pub mod resampling;
pub mod rng;
pub mod stats;
pub mod toy;
pub mod trace;

pub use adaptive::{
    calibrate_alpha, init_stage, run_self_calibrated, smc_iteration, CalibrationOutcome, InitResult,
    SelfCalibratedConfig, SelfCalibratedRun,
};
pub use baseline::{abc_reject, mcmc_abc_chain, mcmc_abc_population, mcmc_abc_step, naive_smc, Acceptance, McmcKernelConfig};
pub use counter::{Phase, SimCounter};
pub use diagnostics::{ess_aggregated, estimate_accept_prob, gain_factor, l1_error};
pub use error::{AbcError, Result};
pub use model::{Context, ModelSpec, Simulator};
pub use particle::{Particle, ParticleArray};
pub use proposal::{proposal_scale, GaussianProposal};
pub use resampling::{residual_resample, ResamplePlan};
pub use rng::{StreamRng, Streams};
pub use toy::{toy_model, Functional, ToyPosterior};
pub use trace::{IterationRecord, RunTrace, StopReason};

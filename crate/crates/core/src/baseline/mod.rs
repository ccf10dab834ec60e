//! Reference samplers: plain rejection, the MCMC-ABC kernel, and a
//! fixed-schedule sequential sampler.

mod mcmc;
mod naive;
mod reject;

pub use mcmc::{mcmc_abc_chain, mcmc_abc_population, mcmc_abc_step, McmcKernelConfig, PriorDensity, Proposal, StepOutcome};
pub use naive::naive_smc;
pub use reject::{abc_reject, Acceptance, RejectOutput};

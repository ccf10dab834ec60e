use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::counter::Phase;
use crate::error::{AbcError, Result};
use crate::model::Context;
use crate::particle::{Particle, ParticleArray};
use crate::proposal::GaussianProposal;
use crate::rng::{Domain, StreamRng};

/// Prior density on the box, for models whose prior is not uniform.
pub type PriorDensity = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Settings of one MCMC-ABC transition.
#[derive(Clone)]
pub struct McmcKernelConfig {
    pub proposal: GaussianProposal,
    pub epsilon: f64,
    /// With a uniform prior the Metropolis–Hastings ratio is 1 inside the box
    /// and 0 outside. Disable to use `prior_density` for the full ratio.
    pub uniform_prior_shortcut: bool,
    pub prior_density: Option<PriorDensity>,
    /// Skip the simulation when the decision is already "reject" from the
    /// parameter alone. Changes simulation counts, never the chain path.
    pub defer_simulation: bool,
}

impl fmt::Debug for McmcKernelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("McmcKernelConfig")
            .field("sigma", self.proposal.sigma())
            .field("epsilon", &self.epsilon)
            .field("uniform_prior_shortcut", &self.uniform_prior_shortcut)
            .field("prior_density", &self.prior_density.is_some())
            .field("defer_simulation", &self.defer_simulation)
            .finish()
    }
}

impl McmcKernelConfig {
    pub fn new(proposal: GaussianProposal, epsilon: f64) -> Self {
        Self {
            proposal,
            epsilon,
            uniform_prior_shortcut: true,
            prior_density: None,
            defer_simulation: true,
        }
    }

    pub fn with_prior_density(mut self, density: PriorDensity) -> Self {
        self.uniform_prior_shortcut = false;
        self.prior_density = Some(density);
        self
    }
}

/// A proposed move. `z` and `dist` are absent when the simulation was skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub theta: Vec<f64>,
    pub in_box: bool,
    /// Outcome of the prior part of the acceptance test (always true under
    /// the uniform shortcut).
    pub prior_ok: bool,
    pub z: Option<Vec<f64>>,
    pub dist: Option<f64>,
}

impl Proposal {
    /// Whether the move is accepted at tolerance `epsilon`.
    pub fn accepted_at(&self, epsilon: f64) -> bool {
        self.in_box && self.prior_ok && self.dist.is_some_and(|d| d <= epsilon)
    }

    pub fn to_particle(&self) -> Option<Particle> {
        Some(Particle::new(self.theta.clone(), self.z.clone()?, self.dist?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next: Particle,
    pub moved: bool,
    pub proposal: Proposal,
}

/// One MCMC-ABC transition from `current`, which must lie within the
/// tolerance.
pub fn mcmc_abc_step(
    ctx: &Context<'_>,
    current: &Particle,
    cfg: &McmcKernelConfig,
    rng: &mut StreamRng,
    phase: Phase,
) -> Result<StepOutcome> {
    if !(current.dist <= cfg.epsilon) {
        return Err(AbcError::InvalidArgument(format!(
            "chain state at distance {} is outside tolerance {}",
            current.dist, cfg.epsilon
        )));
    }
    let theta = cfg.proposal.propose(&current.theta, rng);
    let in_box = ctx.model.in_prior(&theta);
    let prior_ok = match (&cfg.prior_density, cfg.uniform_prior_shortcut) {
        (Some(density), false) => {
            // The uniform draw is taken with the proposal, before any simulation.
            let r: f64 = rng.random();
            in_box && r < density(&theta) / density(&current.theta)
        }
        _ => true,
    };

    let mut proposal = Proposal {
        theta,
        in_box,
        prior_ok,
        z: None,
        dist: None,
    };
    if cfg.defer_simulation && !(in_box && prior_ok) {
        return Ok(StepOutcome {
            next: current.clone(),
            moved: false,
            proposal,
        });
    }
    let z = ctx.simulate(&proposal.theta, rng, phase)?;
    proposal.dist = Some(ctx.model.distance(&z));
    proposal.z = Some(z);

    let moved = proposal.accepted_at(cfg.epsilon);
    let next = if moved {
        proposal.to_particle().expect("simulated proposal")
    } else {
        current.clone()
    };
    Ok(StepOutcome { next, moved, proposal })
}

/// Runs `steps` transitions from `init`. Step `s` draws from stream
/// `(Mcmc, chain_id, s)`. Returns the `steps + 1` visited states.
pub fn mcmc_abc_chain(
    ctx: &Context<'_>,
    init: Particle,
    steps: usize,
    cfg: &McmcKernelConfig,
    chain_id: u64,
) -> Result<Vec<Particle>> {
    let mut chain = Vec::with_capacity(steps + 1);
    chain.push(init);
    for s in 0..steps {
        let mut rng = ctx.streams.rng(Domain::Mcmc, chain_id, s as u64);
        let out = mcmc_abc_step(ctx, chain.last().expect("non-empty"), cfg, &mut rng, Phase::Mcmc)?;
        chain.push(out.next);
    }
    Ok(chain)
}

/// Runs `n` chains of `steps` transitions and returns their final states.
/// Chains start from a random permutation of `start` (cycled when `n`
/// exceeds its size), so a distance-sorted input does not bias the starts.
/// Chain `c` uses the streams of [`mcmc_abc_chain`] with `chain_id = c`.
pub fn mcmc_abc_population(
    ctx: &Context<'_>,
    start: &ParticleArray,
    n: usize,
    steps: usize,
    cfg: &McmcKernelConfig,
) -> Result<ParticleArray> {
    if start.is_empty() {
        return Err(AbcError::EmptySample);
    }
    let mut order: Vec<usize> = (0..start.len()).collect();
    order.shuffle(&mut ctx.streams.rng(Domain::McmcStart, 0, 0));
    let finals = (0..n)
        .into_par_iter()
        .map(|c| {
            let init = start.particles[order[c % order.len()]].clone();
            let mut chain = mcmc_abc_chain(ctx, init, steps, cfg, c as u64)?;
            Ok(chain.pop().expect("chain holds its initial state"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ParticleArray::new(finals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counter::SimCounter;
    use crate::model::ModelSpec;
    use crate::rng::Streams;
    use crate::toy::{std_normal_cdf, toy_model};

    fn origin() -> Particle {
        Particle::new(vec![0.0], vec![0.0], 0.0)
    }

    #[test]
    fn out_of_box_proposal_is_rejected_without_simulating() {
        // Box [-0.1, 0.1] with a huge proposal: almost every draw leaves the box.
        let m = toy_model(0.1).unwrap();
        let c = SimCounter::new();
        let ctx = Context::new(&m, &c, Streams::new(1));
        let cfg = McmcKernelConfig::new(GaussianProposal::diagonal(&[1e6]).unwrap(), 1.0);
        let mut rng = ctx.streams.rng(Domain::Test, 0, 0);
        let out = mcmc_abc_step(&ctx, &origin(), &cfg, &mut rng, Phase::Mcmc).unwrap();
        assert!(!out.proposal.in_box);
        assert!(!out.moved);
        assert_eq!(out.next, origin());
        assert!(out.proposal.z.is_none());
        assert_eq!(c.get(Phase::Mcmc), 0);
    }

    #[test]
    fn infinite_tolerance_always_moves_inside_box() {
        let m = toy_model(1e6).unwrap();
        let c = SimCounter::new();
        let ctx = Context::new(&m, &c, Streams::new(2));
        let cfg = McmcKernelConfig::new(GaussianProposal::diagonal(&[1.0]).unwrap(), f64::INFINITY);
        for s in 0..200 {
            let mut rng = ctx.streams.rng(Domain::Test, 0, s);
            assert!(mcmc_abc_step(&ctx, &origin(), &cfg, &mut rng, Phase::Mcmc).unwrap().moved);
        }
    }

    #[test]
    fn chain_counts() {
        let m = toy_model(1e6).unwrap();
        let c = SimCounter::new();
        let ctx = Context::new(&m, &c, Streams::new(3));
        let cfg = McmcKernelConfig::new(GaussianProposal::diagonal(&[1.0]).unwrap(), f64::INFINITY);
        assert_eq!(mcmc_abc_chain(&ctx, origin(), 0, &cfg, 0).unwrap(), vec![origin()]);
        let chain = mcmc_abc_chain(&ctx, origin(), 250, &cfg, 1).unwrap();
        assert_eq!(chain.len(), 251);
        assert_eq!(c.get(Phase::Mcmc), 250);
    }

    #[test]
    fn narrow_box_saves_simulations() {
        // Box [-1, 1], proposal sd 10 from 0: P(in box) = 2 Phi(0.1) - 1 ~ 0.08.
        let m = toy_model(1.0).unwrap();
        let c = SimCounter::new();
        let ctx = Context::new(&m, &c, Streams::new(4));
        let cfg = McmcKernelConfig::new(GaussianProposal::diagonal(&[100.0]).unwrap(), f64::INFINITY);
        let steps = 2000;
        mcmc_abc_chain(&ctx, origin(), steps, &cfg, 0).unwrap();
        let sims = c.get(Phase::Mcmc) as f64;
        assert!(sims < steps as f64);
        // The chain wanders inside the box, so the in-box rate is at most the
        // rate from the centre.
        let from_centre = 2.0 * std_normal_cdf(0.1) - 1.0;
        assert!(sims / (steps as f64) < from_centre + 0.03, "{sims}");
    }

    #[test]
    fn deferral_changes_counts_not_path() {
        for seed in 0..5 {
            let m = toy_model(1.0).unwrap();
            let (c1, c2) = (SimCounter::new(), SimCounter::new());
            let ctx1 = Context::new(&m, &c1, Streams::new(seed));
            let ctx2 = Context::new(&m, &c2, Streams::new(seed));
            let cfg = McmcKernelConfig::new(GaussianProposal::diagonal(&[4.0]).unwrap(), 0.5);
            let mut eager = cfg.clone();
            eager.defer_simulation = false;
            let a = mcmc_abc_chain(&ctx1, origin(), 500, &cfg, 0).unwrap();
            let b = mcmc_abc_chain(&ctx2, origin(), 500, &eager, 0).unwrap();
            assert_eq!(a, b);
            assert_eq!(c2.get(Phase::Mcmc), 500);
            assert!(c1.get(Phase::Mcmc) < 500);
        }
    }

    #[test]
    fn rejects_start_outside_tolerance() {
        let m = toy_model(10.0).unwrap();
        let c = SimCounter::new();
        let ctx = Context::new(&m, &c, Streams::new(5));
        let cfg = McmcKernelConfig::new(GaussianProposal::diagonal(&[1.0]).unwrap(), 0.1);
        let far = Particle::new(vec![3.0], vec![3.0], 3.0);
        assert!(mcmc_abc_chain(&ctx, far, 3, &cfg, 0).is_err());
    }

    #[test]
    fn non_uniform_prior_targets_its_density() {
        // Triangular prior density 1 + x on [-1, 1] with an uninformative
        // tolerance: the chain must sample the prior itself.
        let sim = |theta: &[f64], _: &mut StreamRng| Ok(vec![theta[0]]);
        let m = ModelSpec::new("tri", vec![(-1.0, 1.0)], vec![0.0], sim).unwrap();
        let c = SimCounter::new();
        let ctx = Context::new(&m, &c, Streams::new(6));
        let density: PriorDensity = Arc::new(|t: &[f64]| 1.0 + t[0]);
        let cfg = McmcKernelConfig::new(GaussianProposal::diagonal(&[0.5]).unwrap(), f64::INFINITY)
            .with_prior_density(density);
        let start = Particle::new(vec![0.5], vec![0.5], 0.5);
        let chain = mcmc_abc_chain(&ctx, start, 200_000, &cfg, 0).unwrap();
        let mean = chain.iter().map(|p| p.theta[0]).sum::<f64>() / chain.len() as f64;
        // E[x] under (1 + x)/2 on [-1, 1] is 1/3.
        assert!((mean - 1.0 / 3.0).abs() < 0.02, "{mean}");
    }
}

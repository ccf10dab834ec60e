//! Self-calibrated sequential sampler.
//!
//! The run has three stages:
//!
//! 1. **Initialisation.** Rejection sampling in batches of `N`, keeping the
//!    best `N` particles, until the determinant of their parameter covariance
//!    drops below `shrink_factor` times that of the first batch, or until the
//!    best `N` already meet the target tolerance (in which case the run ends).
//! 2. **Sequential iterations.** Each iteration picks the smallest kept
//!    fraction `alpha` on a grid of step `1/alpha_grid` such that
//!    `alpha + rho >= 1`, where `rho` is the estimated probability that one
//!    MCMC-ABC step at the new tolerance moves a particle. Proposals made
//!    while estimating `rho` are reused as the moves of the first block of
//!    the new array, so every iteration costs exactly `N` simulations.
//! 3. **Post-processing.** Once `rho <= rho_stop` the sequential stage stops
//!    and a rejection step trims the array to the target tolerance if
//!    particles below it exist.

use rayon::prelude::*;

use crate::baseline::Proposal;
use crate::counter::Phase;
use crate::diagnostics::ess_aggregated;
use crate::error::{AbcError, Result};
use crate::model::Context;
use crate::particle::{Particle, ParticleArray};
use crate::proposal::{proposal_scale, GaussianProposal};
use crate::resampling::residual_resample_equal;
use crate::rng::{Domain, StreamRng};
use crate::stats::covariance;
use crate::trace::{InitSummary, IterationRecord, RunTrace, StopReason};

#[derive(Debug, Clone, PartialEq)]
pub struct SelfCalibratedConfig {
    /// Array size `N`.
    pub n: usize,
    pub epsilon_target: f64,
    pub rho_stop: f64,
    pub shrink_factor: f64,
    /// Number of grid steps for `alpha`; 100 gives the 0.01 grid.
    pub alpha_grid: usize,
    pub max_iters: usize,
    pub max_init_batches: usize,
    /// Accept first-block moves on the current particle's distance instead
    /// of the proposal's (the literal reading of the pseudocode). Only for
    /// comparison runs: the resulting array no longer respects the tolerance.
    pub literal_line_15: bool,
}

impl SelfCalibratedConfig {
    pub fn new(n: usize, epsilon_target: f64) -> Self {
        Self {
            n,
            epsilon_target,
            rho_stop: 0.1,
            shrink_factor: 0.5,
            alpha_grid: 100,
            max_iters: 200,
            max_init_batches: 10_000,
            literal_line_15: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(AbcError::InvalidArgument(msg));
        if self.n < 2 {
            return bad(format!("N must be at least 2, got {}", self.n));
        }
        if !(self.epsilon_target >= 0.0 && self.epsilon_target.is_finite()) {
            return bad(format!("target tolerance must be finite and >= 0, got {}", self.epsilon_target));
        }
        if !(self.rho_stop > 0.0 && self.rho_stop <= 1.0) {
            return bad(format!("rho_stop must be in (0, 1], got {}", self.rho_stop));
        }
        if !(self.shrink_factor > 0.0 && self.shrink_factor < 1.0) {
            return bad(format!("shrink_factor must be in (0, 1), got {}", self.shrink_factor));
        }
        if self.alpha_grid == 0 {
            return bad("alpha_grid must be positive".into());
        }
        if self.max_init_batches < 2 {
            return bad("max_init_batches must be at least 2".into());
        }
        Ok(())
    }
}

/// Output of the initialisation stage.
#[derive(Debug, Clone)]
pub struct InitResult {
    /// The best `N` particles seen, ascending by distance.
    pub array: ParticleArray,
    pub epsilon0: f64,
    pub batches_used: usize,
    pub v_prior: f64,
    pub v_final: f64,
    /// The target tolerance was reached; `array` is the final output.
    pub terminal: bool,
}

fn det_var(array: &ParticleArray) -> f64 {
    covariance(&array.thetas()).determinant()
}

/// Batched rejection sampling until the best `N` particles are markedly
/// more concentrated than the prior, or reach `epsilon_target`.
pub fn init_stage(
    ctx: &Context<'_>,
    n: usize,
    epsilon_target: f64,
    shrink_factor: f64,
    max_batches: usize,
) -> Result<InitResult> {
    if n < 2 {
        return Err(AbcError::InvalidArgument("N must be at least 2".into()));
    }
    if !(epsilon_target >= 0.0 && epsilon_target.is_finite()) {
        return Err(AbcError::InvalidArgument(format!(
            "target tolerance must be finite and >= 0, got {epsilon_target}"
        )));
    }
    let batch = |k: usize| -> Result<Vec<Particle>> {
        (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = ctx.streams.rng(Domain::Init, k as u64, i);
                ctx.prior_particle(&mut rng, Phase::Init)
            })
            .collect()
    };

    let mut best = ParticleArray::new(batch(1)?);
    best.sort_by_distance();
    let v_prior = det_var(&best);
    if !(v_prior > 0.0) {
        return Err(AbcError::DegenerateArray(
            "first batch has a singular parameter covariance".into(),
        ));
    }
    let mut k = 1;
    let mut epsilon0 = f64::INFINITY;
    let mut v = v_prior;
    while epsilon0 >= epsilon_target && v >= shrink_factor * v_prior {
        if k == max_batches {
            return Err(AbcError::BudgetExceeded {
                batches: k,
                partial: Box::new(best),
            });
        }
        k += 1;
        best.particles.extend(batch(k)?);
        // Stable sort: among equal distances, earlier draws stay first.
        best.sort_by_distance();
        best.particles.truncate(n);
        v = det_var(&best);
        epsilon0 = best.particles[n - 1].dist;
    }
    Ok(InitResult {
        array: best,
        epsilon0,
        batches_used: k,
        v_prior,
        v_final: v,
        terminal: epsilon0 < epsilon_target,
    })
}

/// Result of choosing `alpha_t` for one iteration.
#[derive(Debug, Clone)]
pub struct CalibrationOutcome {
    pub alpha: f64,
    /// Number of kept particles, `floor(alpha N)` (at least 1).
    pub kept: usize,
    pub epsilon: f64,
    pub rho_hat: f64,
    /// One simulated proposal per kept particle, in array order.
    pub proposals: Vec<Proposal>,
}

fn simulate_proposal(
    ctx: &Context<'_>,
    from: &Particle,
    kernel: &GaussianProposal,
    rng: &mut StreamRng,
    phase: Phase,
) -> Result<Proposal> {
    let theta = kernel.propose(&from.theta, rng);
    let in_box = ctx.model.in_prior(&theta);
    let z = ctx.simulate(&theta, rng, phase)?;
    let dist = ctx.model.distance(&z);
    Ok(Proposal {
        theta,
        in_box,
        prior_ok: true,
        z: Some(z),
        dist: Some(dist),
    })
}

fn kept_at(step: usize, n: usize, grid: usize) -> usize {
    (step * n / grid).max(1)
}

/// Finds the smallest grid value of `alpha` with `alpha + rho >= 1`.
///
/// Each pass simulates proposals only for the newly kept particles and then
/// re-evaluates every cached proposal against the pass's tolerance, so the
/// total cost is exactly `kept` simulations.
pub fn calibrate_alpha(
    ctx: &Context<'_>,
    sorted: &ParticleArray,
    kernel: &GaussianProposal,
    iteration: usize,
    alpha_grid: usize,
) -> Result<CalibrationOutcome> {
    let n = sorted.len();
    if n == 0 {
        return Err(AbcError::EmptySample);
    }
    if !sorted.is_sorted_by_distance() {
        return Err(AbcError::InvalidArgument("calibration needs an array sorted by distance".into()));
    }
    let mut proposals: Vec<Proposal> = Vec::new();
    let mut step = 0;
    loop {
        step += 1;
        let kept = kept_at(step, n, alpha_grid);
        let epsilon = sorted.particles[kept - 1].dist;
        let fresh: Vec<Proposal> = (proposals.len()..kept)
            .into_par_iter()
            .map(|i| {
                let mut rng = ctx.streams.rng(Domain::Calibrate, iteration as u64, i as u64);
                simulate_proposal(ctx, &sorted.particles[i], kernel, &mut rng, Phase::Calibration)
            })
            .collect::<Result<_>>()?;
        proposals.extend(fresh);

        let moves = proposals.iter().filter(|p| p.accepted_at(epsilon)).count();
        // alpha + rho >= 1 in exact integer form: step/grid + moves/kept >= 1.
        if step * kept + alpha_grid * moves >= alpha_grid * kept || step >= alpha_grid {
            return Ok(CalibrationOutcome {
                alpha: step as f64 / alpha_grid as f64,
                kept,
                epsilon,
                rho_hat: moves as f64 / kept as f64,
                proposals,
            });
        }
    }
}

/// One full iteration: calibration, reuse of the calibration proposals as
/// moves of the first block, then residual resampling of the survivors into
/// the remaining slots, each of which gets one fresh move.
pub fn smc_iteration(
    ctx: &Context<'_>,
    mut array: ParticleArray,
    kernel: &GaussianProposal,
    iteration: usize,
    cfg: &SelfCalibratedConfig,
) -> Result<(ParticleArray, IterationRecord)> {
    let n = array.len();
    let before = ctx.counter.algorithm_total();
    array.sort_by_distance();
    let cal = calibrate_alpha(ctx, &array, kernel, iteration, cfg.alpha_grid)?;
    let (kept, eps) = (cal.kept, cal.epsilon);

    let mut next: Vec<Particle> = Vec::with_capacity(n);
    for (i, prop) in cal.proposals.iter().enumerate() {
        let accept = if cfg.literal_line_15 {
            prop.in_box && array.particles[i].dist <= eps
        } else {
            prop.accepted_at(eps)
        };
        next.push(if accept {
            prop.to_particle().expect("calibration proposals are simulated")
        } else {
            array.particles[i].clone()
        });
    }

    let plan = residual_resample_equal(kept, n, &mut ctx.streams.rng(Domain::Resample, iteration as u64, 0))?;
    debug_assert!(plan.assignment[..kept].iter().enumerate().all(|(i, &a)| i == a));
    let rest: Vec<Particle> = (kept..n)
        .into_par_iter()
        .map(|slot| {
            let base = &array.particles[plan.assignment[slot]];
            let mut rng = ctx.streams.rng(Domain::Move, iteration as u64, slot as u64);
            let prop = simulate_proposal(ctx, base, kernel, &mut rng, Phase::Move)?;
            Ok(if prop.accepted_at(eps) {
                prop.to_particle().expect("simulated")
            } else {
                base.clone()
            })
        })
        .collect::<Result<_>>()?;
    next.extend(rest);

    let out = ParticleArray::new(next);
    let record = IterationRecord {
        t: iteration,
        epsilon: eps,
        alpha: cal.alpha,
        rho_hat: cal.rho_hat,
        sims_used: ctx.counter.algorithm_total() - before,
        distinct_count: out.distinct_count(),
        ess: ess_aggregated(&out, None)?,
    };
    Ok((out, record))
}

/// Final array and trace of a self-calibrated run.
#[derive(Debug, Clone)]
pub struct SelfCalibratedRun {
    pub array: ParticleArray,
    pub trace: RunTrace,
}

/// Runs initialisation, sequential iterations and post-processing.
pub fn run_self_calibrated(ctx: &Context<'_>, cfg: &SelfCalibratedConfig) -> Result<SelfCalibratedRun> {
    cfg.validate()?;
    let start = ctx.counter.algorithm_total();
    let init = init_stage(ctx, cfg.n, cfg.epsilon_target, cfg.shrink_factor, cfg.max_init_batches)?;
    let init_summary = InitSummary {
        batches: init.batches_used,
        v_prior: init.v_prior,
        v_final: init.v_final,
        epsilon0: init.epsilon0,
        terminal: init.terminal,
        distinct_count: init.array.distinct_count(),
        ess: ess_aggregated(&init.array, None)?,
    };

    let mut records: Vec<IterationRecord> = Vec::new();
    let mut array = init.array;
    let mut level = init.epsilon0;
    let stop_reason = if init.terminal {
        StopReason::InitTerminal
    } else if cfg.rho_stop >= 1.0 {
        StopReason::SequentialDisabled
    } else {
        let mut t = 0;
        loop {
            t += 1;
            let kernel = GaussianProposal::new(proposal_scale(&array.thetas())?)?;
            let (next, rec) = smc_iteration(ctx, array, &kernel, t, cfg)?;
            array = next;
            level = rec.epsilon;
            let rho = rec.rho_hat;
            records.push(rec);
            if level <= cfg.epsilon_target {
                break StopReason::TargetReached;
            }
            if rho <= cfg.rho_stop {
                break StopReason::RhoBelowThreshold;
            }
            if t >= cfg.max_iters {
                break StopReason::MaxIterations;
            }
        }
    };

    let total_sims = ctx.counter.algorithm_total() - start;
    debug_assert_eq!(
        total_sims,
        ((init_summary.batches + records.len()) * cfg.n) as u64,
        "simulation budget"
    );

    // Post-processing: a rejection step down to the target when possible.
    let (array, final_epsilon, target_reached) = if level <= cfg.epsilon_target {
        (array, level, true)
    } else {
        let trimmed = array.filter_within(cfg.epsilon_target);
        if trimmed.is_empty() {
            (array, level, false)
        } else {
            (trimmed, cfg.epsilon_target, true)
        }
    };
    let mut array = array;
    array.sort_by_distance();

    let trace = RunTrace {
        sampler: "self-calibrated".into(),
        config: None,
        init: Some(init_summary),
        iterations: records,
        counter: ctx.counter.snapshot(),
        total_sims,
        final_epsilon,
        target_epsilon: Some(cfg.epsilon_target),
        target_reached,
        final_size: array.len(),
        final_distinct: array.distinct_count(),
        final_ess: ess_aggregated(&array, None)?,
        stop_reason,
        accept_prob: None,
        gain_factor: None,
    };
    Ok(SelfCalibratedRun { array, trace })
}

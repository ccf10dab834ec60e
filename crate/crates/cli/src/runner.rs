//! Replicate orchestration and artifact writing.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use abc_core::baseline::RejectOutput;
use abc_core::counter::CounterSnapshot;
use abc_core::diagnostics::{estimate_accept_prob, gain_factor};
use abc_core::rng::replicate_seed;
use abc_core::toy::toy_accept_prob;
use abc_core::{
    abc_reject, ess_aggregated, mcmc_abc_population, naive_smc, proposal_scale, run_self_calibrated, toy_model, AbcError,
    Acceptance, Context, GaussianProposal, McmcKernelConfig, ModelSpec, ParticleArray, RunTrace, SelfCalibratedConfig,
    SimCounter, StopReason, Streams,
};

pub use crate::artifacts::SummaryRow;
use crate::artifacts::{write_particles, write_summary, write_trace};
use crate::config::{AcceptProbSource, RunConfig, SamplerKind};
use crate::error::CliError;

/// Stream tag reserved for reference simulations, so estimating the
/// acceptance probability never reuses a sampler's random numbers.
const REFERENCE_TAG: u64 = 0x5_eed0_f2ef;

pub struct ReplicateOutput {
    pub array: ParticleArray,
    pub trace: RunTrace,
}

/// A failed replicate, with whatever particles it had produced.
pub struct ReplicateFailure {
    pub error: CliError,
    pub partial: Option<ParticleArray>,
}

impl From<AbcError> for ReplicateFailure {
    fn from(e: AbcError) -> Self {
        match e {
            AbcError::BudgetExceeded { batches, partial } => ReplicateFailure {
                error: CliError::InitBudget(batches),
                partial: Some(*partial),
            },
            other => ReplicateFailure {
                error: other.into(),
                partial: None,
            },
        }
    }
}

pub fn build_model(cfg: &RunConfig) -> Result<ModelSpec, CliError> {
    match cfg.model.as_str() {
        "toy" => Ok(toy_model(cfg.prior_halfwidth)?),
        other => Err(CliError::config(format!("unknown model `{other}`"))),
    }
}

/// Prior-predictive probability of landing within `epsilon`, for the gain
/// factor. `None` when it is zero and the gain is undefined.
pub fn accept_prob(cfg: &RunConfig, ctx: &Context<'_>, epsilon: f64) -> Result<Option<f64>, CliError> {
    let p = match cfg.accept_prob {
        AcceptProbSource::Oracle => toy_accept_prob(epsilon, cfg.prior_halfwidth),
        AcceptProbSource::Estimate(n_ref) => {
            let reference = Context::new(ctx.model, ctx.counter, ctx.streams.child(REFERENCE_TAG));
            estimate_accept_prob(&reference, epsilon, n_ref)?.estimate
        }
    };
    Ok((p > 0.0).then_some(p))
}

fn single_pass_trace(
    sampler: SamplerKind,
    array: &ParticleArray,
    epsilon: f64,
    target: Option<f64>,
    counter: CounterSnapshot,
) -> Result<RunTrace, AbcError> {
    Ok(RunTrace {
        sampler: sampler.name().into(),
        config: None,
        init: None,
        iterations: Vec::new(),
        total_sims: counter.total,
        counter,
        final_epsilon: epsilon,
        target_epsilon: target,
        target_reached: true,
        final_size: array.len(),
        final_distinct: array.distinct_count(),
        final_ess: if array.is_empty() { 0.0 } else { ess_aggregated(array, None)? },
        stop_reason: StopReason::Completed,
        accept_prob: None,
        gain_factor: None,
    })
}

fn run_reject(cfg: &RunConfig, ctx: &Context<'_>) -> Result<(ParticleArray, RunTrace), AbcError> {
    let accept = match (cfg.epsilon, cfg.quantile) {
        (Some(e), _) => Acceptance::Tolerance(e),
        (None, Some(q)) => Acceptance::Quantile(q),
        (None, None) => unreachable!("validated config"),
    };
    let RejectOutput { array, epsilon, .. } = abc_reject(ctx, cfg.n_prior, accept)?;
    let trace = single_pass_trace(cfg.sampler, &array, epsilon, cfg.epsilon, ctx.counter.snapshot())?;
    Ok((array, trace))
}

/// `n` chains of `mcmc_steps` steps started from a rejection sample at the
/// same tolerance. Only final states are kept.
fn run_mcmc(cfg: &RunConfig, ctx: &Context<'_>) -> Result<(ParticleArray, RunTrace), AbcError> {
    let eps = cfg.epsilon.expect("validated config");
    let start = abc_reject(ctx, cfg.n_prior, Acceptance::Tolerance(eps))?.array;
    let proposal = match cfg.mcmc_sigma {
        Some(s) => GaussianProposal::diagonal(&vec![s * s; ctx.model.param_dim()])?,
        None => GaussianProposal::new(proposal_scale(&start.thetas())?)?,
    };
    let kernel = McmcKernelConfig::new(proposal, eps);
    let array = mcmc_abc_population(ctx, &start, cfg.n, cfg.mcmc_steps, &kernel)?;
    let trace = single_pass_trace(cfg.sampler, &array, eps, Some(eps), ctx.counter.snapshot())?;
    Ok((array, trace))
}

/// Runs replicate `r` (1-based) on the current rayon pool.
pub fn run_replicate(cfg: &RunConfig, r: u64) -> Result<ReplicateOutput, ReplicateFailure> {
    let model = build_model(cfg).map_err(|error| ReplicateFailure { error, partial: None })?;
    let counter = SimCounter::new();
    let ctx = Context::new(&model, &counter, Streams::new(replicate_seed(cfg.seed, r)));
    let (array, mut trace) = match cfg.sampler {
        SamplerKind::Reject => run_reject(cfg, &ctx)?,
        SamplerKind::Mcmc => run_mcmc(cfg, &ctx)?,
        SamplerKind::NaiveSmc => naive_smc(&ctx, cfg.n, &cfg.schedule)?,
        SamplerKind::SelfCalibrated => {
            let sc = SelfCalibratedConfig {
                rho_stop: cfg.rho_stop,
                shrink_factor: cfg.shrink_factor,
                max_iters: cfg.max_iters,
                max_init_batches: cfg.max_init_batches,
                literal_line_15: cfg.literal_line_15,
                ..SelfCalibratedConfig::new(cfg.n, cfg.epsilon.expect("validated config"))
            };
            let run = run_self_calibrated(&ctx, &sc)?;
            (run.array, run.trace)
        }
    };
    let fail = |error: CliError| ReplicateFailure {
        error,
        partial: Some(array.clone()),
    };
    if trace.final_ess > 0.0 {
        trace.accept_prob = accept_prob(cfg, &ctx, trace.final_epsilon).map_err(fail)?;
        if let Some(p) = trace.accept_prob {
            trace.gain_factor = Some(gain_factor(&trace, trace.final_ess, p).map_err(|e| fail(e.into()))?);
        }
    }
    trace.config = Some(cfg.echo());
    // Re-snapshot so reference simulations show up as excluded.
    trace.counter = counter.snapshot();
    debug_assert_eq!(trace.counter.total, trace.total_sims);
    Ok(ReplicateOutput { array, trace })
}

pub fn particles_path(dir: &Path, r: u64) -> PathBuf {
    dir.join(format!("particles_{r}.csv"))
}

pub fn trace_path(dir: &Path, r: u64) -> PathBuf {
    dir.join(format!("trace_{r}.json"))
}

fn partial(path: PathBuf) -> PathBuf {
    let mut s = path.into_os_string();
    s.push(".partial");
    PathBuf::from(s)
}

pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Report(format!("cannot start {workers} workers: {e}")))
}

/// Runs every replicate and writes `particles_r.csv`, `trace_r.json` and
/// `summary.csv` under the output directory. On a sampler failure the
/// artifacts gathered so far are kept with a `.partial` suffix.
pub fn run_experiment(cfg: &RunConfig) -> Result<Vec<SummaryRow>, CliError> {
    let dir = &cfg.output;
    fs::create_dir_all(dir)?;
    let pool = thread_pool(cfg.workers)?;
    let model = build_model(cfg)?;
    let (p, d) = (model.param_dim(), model.summary_dim());

    let mut rows = Vec::with_capacity(cfg.replicates as usize);
    for r in 1..=cfg.replicates {
        let started = Instant::now();
        match pool.install(|| run_replicate(cfg, r)) {
            Ok(out) => {
                write_particles(&particles_path(dir, r), &out.array, p, d)?;
                write_trace(&trace_path(dir, r), &out.trace)?;
                rows.push(SummaryRow {
                    replicate: r,
                    total_sims: out.trace.total_sims,
                    final_eps: out.trace.final_epsilon,
                    ess: out.trace.final_ess,
                    gain: out.trace.gain_factor.unwrap_or(f64::NAN),
                    iterations: out.trace.iteration_count(),
                    wall_ms: started.elapsed().as_millis() as u64,
                });
            }
            Err(fail) => {
                if let Some(array) = &fail.partial {
                    write_particles(&partial(particles_path(dir, r)), array, p, d)?;
                }
                write_summary(&partial(dir.join("summary.csv")), &rows)?;
                return Err(fail.error);
            }
        }
    }
    write_summary(&dir.join("summary.csv"), &rows)?;
    Ok(rows)
}

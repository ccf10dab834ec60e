use rayon::prelude::*;

use crate::counter::Phase;
use crate::diagnostics::ess_aggregated;
use crate::error::{AbcError, Result};
use crate::model::Context;
use crate::particle::{Particle, ParticleArray};
use crate::proposal::{proposal_scale, GaussianProposal};
use crate::resampling::residual_resample_equal;
use crate::rng::Domain;
use crate::trace::{IterationRecord, RunTrace, StopReason};

use super::mcmc::{mcmc_abc_step, McmcKernelConfig};

/// Sequential sampler with a fixed, strictly decreasing tolerance schedule.
///
/// Each iteration keeps the particles within the next tolerance, resamples
/// them back to `n`, and applies one MCMC-ABC step per particle with the
/// proposal covariance taken from the array before the iteration.
pub fn naive_smc(ctx: &Context<'_>, n: usize, schedule: &[f64]) -> Result<(ParticleArray, RunTrace)> {
    if n < 2 {
        return Err(AbcError::InvalidArgument("array size must be at least 2".into()));
    }
    if schedule.is_empty() {
        return Err(AbcError::InvalidArgument("empty tolerance schedule".into()));
    }
    if schedule.iter().any(|e| e.is_nan() || *e < 0.0) || schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(AbcError::InvalidArgument(
            "schedule must be non-negative and strictly decreasing".into(),
        ));
    }
    let start = ctx.counter.algorithm_total();

    let particles: Vec<Particle> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ctx.streams.rng(Domain::NaiveInit, 0, i);
            ctx.prior_particle(&mut rng, Phase::Naive)
        })
        .collect::<Result<_>>()?;
    let mut array = ParticleArray::new(particles);
    let mut records = Vec::with_capacity(schedule.len());

    for (t, &eps) in schedule.iter().enumerate() {
        array.sort_by_distance();
        let kept = array.particles.partition_point(|p| p.dist <= eps);
        if kept == 0 {
            return Err(AbcError::ScheduleInfeasible {
                iteration: t + 1,
                epsilon: eps,
            });
        }
        let sigma = proposal_scale(&array.thetas())?;
        let cfg = McmcKernelConfig::new(GaussianProposal::new(sigma)?, eps);
        let plan = residual_resample_equal(kept, n, &mut ctx.streams.rng(Domain::NaiveResample, t as u64, 0))?;
        let before = ctx.counter.algorithm_total();

        let steps: Vec<(Particle, bool)> = plan
            .assignment
            .par_iter()
            .enumerate()
            .map(|(slot, &src)| {
                let mut rng = ctx.streams.rng(Domain::NaiveMove, t as u64, slot as u64);
                let out = mcmc_abc_step(ctx, &array.particles[src], &cfg, &mut rng, Phase::Naive)?;
                Ok((out.next, out.moved))
            })
            .collect::<Result<_>>()?;
        let moved = steps.iter().filter(|s| s.1).count();
        array = ParticleArray::new(steps.into_iter().map(|s| s.0).collect());

        records.push(IterationRecord {
            t: t + 1,
            epsilon: eps,
            alpha: kept as f64 / n as f64,
            rho_hat: moved as f64 / n as f64,
            sims_used: ctx.counter.algorithm_total() - before,
            distinct_count: array.distinct_count(),
            ess: ess_aggregated(&array, None)?,
        });
    }
    array.sort_by_distance();

    let final_epsilon = *schedule.last().expect("non-empty");
    let trace = RunTrace {
        sampler: "naive-smc".into(),
        config: None,
        init: None,
        iterations: records,
        counter: ctx.counter.snapshot(),
        total_sims: ctx.counter.algorithm_total() - start,
        final_epsilon,
        target_epsilon: Some(final_epsilon),
        target_reached: true,
        final_size: array.len(),
        final_distinct: array.distinct_count(),
        final_ess: ess_aggregated(&array, None)?,
        stop_reason: StopReason::Completed,
        accept_prob: None,
        gain_factor: None,
    };
    Ok((array, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counter::SimCounter;
    use crate::rng::Streams;
    use crate::toy::toy_model;

    #[test]
    fn infinite_schedule_keeps_prior_predictive() {
        let m = toy_model(10.0).unwrap();
        let c = SimCounter::new();
        let ctx = Context::new(&m, &c, Streams::new(1));
        let (arr, trace) = naive_smc(&ctx, 2000, &[f64::INFINITY]).unwrap();
        assert_eq!(arr.len(), 2000);
        assert_eq!(trace.iterations[0].alpha, 1.0);
        // Prior U(-10, 10): mean 0, variance 100/3.
        let xs: Vec<f64> = arr.iter().map(|p| p.theta[0]).collect();
        let mean = crate::stats::mean(&xs);
        assert!(mean.abs() < 0.5, "{mean}");
        assert!((crate::stats::variance(&xs) - 100.0 / 3.0).abs() < 3.0);
        assert!(arr.iter().all(|p| m.in_prior(&p.theta)));
    }

    #[test]
    fn per_iteration_cost_at_most_n() {
        let m = toy_model(10.0).unwrap();
        let c = SimCounter::new();
        let ctx = Context::new(&m, &c, Streams::new(2));
        let n = 1000;
        let (arr, trace) = naive_smc(&ctx, n, &[3.0, 1.0, 0.5, 0.3]).unwrap();
        assert!(trace.iterations.iter().all(|r| r.sims_used <= n as u64));
        assert_eq!(
            trace.total_sims,
            n as u64 + trace.iterations.iter().map(|r| r.sims_used).sum::<u64>()
        );
        assert!(arr.iter().all(|p| p.dist <= 0.3));
    }

    #[test]
    fn infeasible_schedule_aborts() {
        let m = toy_model(10.0).unwrap();
        let c = SimCounter::new();
        let ctx = Context::new(&m, &c, Streams::new(3));
        let err = naive_smc(&ctx, 50, &[5.0, 1e-9]).unwrap_err();
        assert!(matches!(err, AbcError::ScheduleInfeasible { iteration: 2, .. }));
    }

    #[test]
    fn bad_schedules() {
        let m = toy_model(10.0).unwrap();
        let c = SimCounter::new();
        let ctx = Context::new(&m, &c, Streams::new(4));
        assert!(naive_smc(&ctx, 50, &[]).is_err());
        assert!(naive_smc(&ctx, 50, &[1.0, 1.0]).is_err());
        assert!(naive_smc(&ctx, 50, &[1.0, 2.0]).is_err());
    }
}

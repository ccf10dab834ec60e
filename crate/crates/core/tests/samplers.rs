use abc_core::stats::{ks_two_sample, variance};
use abc_core::{
    abc_reject, mcmc_abc_chain, mcmc_abc_population, naive_smc, proposal_scale, toy_model, Acceptance, Context,
    GaussianProposal, McmcKernelConfig, ModelSpec, Particle, Phase, SimCounter, Streams,
};

fn first_coords<'a>(ps: impl IntoIterator<Item = &'a Particle>) -> Vec<f64> {
    ps.into_iter().map(|p| p.theta[0]).collect()
}

fn reject_at(model: &ModelSpec, seed: u64, n_prior: u64, eps: f64) -> Vec<f64> {
    let c = SimCounter::new();
    let ctx = Context::new(model, &c, Streams::new(seed));
    first_coords(abc_reject(&ctx, n_prior, Acceptance::Tolerance(eps)).unwrap().array.iter())
}

#[test]
fn rejection_with_infinite_tolerance_keeps_all() {
    let m = toy_model(10.0).unwrap();
    let c = SimCounter::new();
    let ctx = Context::new(&m, &c, Streams::new(1));
    let out = abc_reject(&ctx, 5000, Acceptance::Tolerance(f64::INFINITY)).unwrap();
    assert_eq!(out.accepted(), 5000);
    assert_eq!(c.get(Phase::Rejection), 5000);
}

#[test]
fn quantile_mode_matches_tolerance_mode_at_realised_epsilon() {
    let m = toy_model(10.0).unwrap();
    let c = SimCounter::new();
    let ctx = Context::new(&m, &c, Streams::new(2));
    let q = abc_reject(&ctx, 200_000, Acceptance::Quantile(0.01)).unwrap();
    assert_eq!(q.accepted(), 2000);
    assert_eq!(q.epsilon, q.array.particles[1999].dist);
    let t = abc_reject(&ctx, 200_000, Acceptance::Tolerance(q.epsilon)).unwrap();
    assert_eq!(q.array, t.array);
}

#[test]
fn stricter_tolerance_selects_an_exact_subset() {
    let m = toy_model(10.0).unwrap();
    let c = SimCounter::new();
    let ctx = Context::new(&m, &c, Streams::new(3));
    let loose = abc_reject(&ctx, 300_000, Acceptance::Tolerance(0.5)).unwrap();
    let strict = abc_reject(&ctx, 300_000, Acceptance::Tolerance(0.09)).unwrap();
    assert_eq!(loose.array.filter_within(0.09), strict.array);
}

/// Integrated autocorrelation time, summing lags until the correlation
/// drops below 0.05.
fn autocorrelation_time(x: &[f64]) -> f64 {
    let mu = x.iter().sum::<f64>() / x.len() as f64;
    let var = variance(x);
    let mut tau = 1.0;
    for lag in 1..x.len() / 10 {
        let r = x.windows(lag + 1).map(|w| (w[0] - mu) * (w[lag] - mu)).sum::<f64>() / ((x.len() - lag) as f64 * var);
        if r < 0.05 {
            break;
        }
        tau += 2.0 * r;
    }
    tau
}

#[test]
fn long_chain_marginal_matches_rejection() {
    let m = toy_model(10.0).unwrap();
    let reference = reject_at(&m, 10, 2_000_000, 0.09);
    let sigma = 4.0 * variance(&reference);
    let c = SimCounter::new();
    let ctx = Context::new(&m, &c, Streams::new(11));
    let cfg = McmcKernelConfig::new(GaussianProposal::diagonal(&[sigma]).unwrap(), 0.09);
    let chain = mcmc_abc_chain(&ctx, Particle::new(vec![0.0], vec![0.0], 0.0), 100_000, &cfg, 0).unwrap();
    // The KS p-value assumes independent draws; thin by twice the
    // integrated autocorrelation time (about 100 steps here).
    let x: Vec<f64> = chain.iter().map(|p| p.theta[0]).collect();
    let thin = (2.0 * autocorrelation_time(&x)).ceil() as usize;
    let thinned: Vec<f64> = x.iter().step_by(thin).copied().collect();
    let ks = ks_two_sample(&thinned, &reference);
    assert!(ks.passes(0.001), "{ks:?}");
    assert!(c.get(Phase::Mcmc) <= 100_000);
}

#[test]
fn kernel_leaves_the_abc_target_invariant() {
    let m = toy_model(10.0).unwrap();
    let c = SimCounter::new();
    let ctx = Context::new(&m, &c, Streams::new(12));
    let start = abc_reject(&ctx, 1_300_000, Acceptance::Tolerance(0.09)).unwrap().array;
    assert!(start.len() >= 10_000);
    let kernel = McmcKernelConfig::new(GaussianProposal::new(proposal_scale(&start.thetas()).unwrap()).unwrap(), 0.09);
    let finals = mcmc_abc_population(&ctx, &start, 10_000, 20, &kernel).unwrap();
    let fresh = reject_at(&m, 13, 1_300_000, 0.09);
    let ks = ks_two_sample(&first_coords(finals.iter()), &fresh);
    assert!(ks.passes(0.001), "{ks:?}");
}

#[test]
fn one_step_naive_smc_matches_rejection() {
    let m = toy_model(10.0).unwrap();
    let c = SimCounter::new();
    let ctx = Context::new(&m, &c, Streams::new(14));
    let (out, trace) = naive_smc(&ctx, 10_000, &[0.09]).unwrap();
    assert!(trace.total_sims <= 20_000);
    assert!(out.iter().all(|p| p.dist <= 0.09));
    let distinct = first_coords(out.distinct());
    let reference = reject_at(&m, 15, 1_000_000, 0.09);
    let ks = ks_two_sample(&distinct, &reference);
    assert!(ks.passes(0.001), "{ks:?} on {} distinct", distinct.len());
}

#[test]
fn naive_smc_costs_at_most_n_per_iteration() {
    let m = toy_model(10.0).unwrap();
    let c = SimCounter::new();
    let ctx = Context::new(&m, &c, Streams::new(16));
    let (_, trace) = naive_smc(&ctx, 2000, &[2.0, 1.0, 0.5, 0.25]).unwrap();
    assert_eq!(trace.iterations.len(), 4);
    assert!(trace.iterations.iter().all(|r| r.sims_used <= 2000));
}

//! Output quality and efficiency measures.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::counter::Phase;
use crate::error::{AbcError, Result};
use crate::model::Context;
use crate::particle::{theta_key, ParticleArray};
use crate::rng::Domain;
use crate::toy::Functional;
use crate::trace::RunTrace;

/// A particle array read together with its weights (equal when absent).
pub type WeightedSample = ParticleArray;

/// Effective sample size after merging duplicate particles.
///
/// Particles with bitwise-identical parameter vectors form one group whose
/// weight is the sum of its members. With `tolerance = Some(h)` coordinates
/// are instead grouped on a grid of step `h`.
pub fn ess_aggregated(sample: &WeightedSample, tolerance: Option<f64>) -> Result<f64> {
    if sample.is_empty() {
        return Err(AbcError::EmptySample);
    }
    let weights = sample.weights_or_equal();
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
        return Err(AbcError::InvalidArgument("weights must be non-negative with positive sum".into()));
    }
    // Groups are accumulated in first-appearance order so the floating-point
    // sums do not depend on hash iteration order.
    let mut slot: HashMap<Vec<u64>, usize> = HashMap::with_capacity(sample.len());
    let mut group_weight: Vec<f64> = Vec::new();
    let mut group_count: Vec<u64> = Vec::new();
    for (p, w) in sample.iter().zip(&weights) {
        let key = match tolerance {
            None => theta_key(&p.theta),
            Some(h) => p.theta.iter().map(|x| (x / h).round() as i64 as u64).collect(),
        };
        let g = *slot.entry(key).or_insert_with(|| {
            group_weight.push(0.0);
            group_count.push(0);
            group_weight.len() - 1
        });
        group_weight[g] += w;
        group_count[g] += 1;
    }
    if sample.weights.is_none() {
        // Equal weights: exact integer form n^2 / sum(c^2).
        let n = sample.len() as f64;
        let sq: u64 = group_count.iter().map(|c| c * c).sum();
        return Ok(n * n / sq as f64);
    }
    let (sum, sum_sq) = group_weight.iter().fold((0.0, 0.0), |(s, q), &w| (s + w, q + w * w));
    Ok(sum * sum / sum_sq)
}

/// `(ESS / accept_prob) / total_sims`: simulations a rejection sampler would
/// need for the same tolerance and ESS, over simulations actually used.
pub fn gain_from_counts(total_sims: u64, final_ess: f64, accept_prob: f64) -> Result<f64> {
    if !(accept_prob > 0.0 && accept_prob <= 1.0) {
        return Err(AbcError::ZeroAcceptProb);
    }
    if total_sims == 0 {
        return Err(AbcError::InvalidArgument("run used no simulations".into()));
    }
    Ok(final_ess / accept_prob / total_sims as f64)
}

pub fn gain_factor(trace: &RunTrace, final_ess: f64, accept_prob: f64) -> Result<f64> {
    gain_from_counts(trace.total_sims, final_ess, accept_prob)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptEstimate {
    pub estimate: f64,
    /// Binomial standard error, or the rule-of-three upper bound `3/n` when
    /// nothing was accepted.
    pub std_error: f64,
    pub accepted: u64,
    pub n_ref: u64,
}

/// Monte Carlo estimate of `P(d(z, x_obs) <= epsilon)` under the
/// prior-predictive. Simulations are charged to [`Phase::Reference`].
pub fn estimate_accept_prob(ctx: &Context<'_>, epsilon: f64, n_ref: u64) -> Result<AcceptEstimate> {
    if n_ref < 100 {
        return Err(AbcError::InvalidArgument("n_ref must be at least 100".into()));
    }
    if epsilon.is_infinite() && epsilon > 0.0 {
        return Ok(AcceptEstimate {
            estimate: 1.0,
            std_error: 0.0,
            accepted: n_ref,
            n_ref,
        });
    }
    let accepted = (0..n_ref)
        .into_par_iter()
        .map(|i| {
            let mut rng = ctx.streams.rng(Domain::Reference, 0, i);
            let p = ctx.prior_particle(&mut rng, Phase::Reference)?;
            Ok(u64::from(p.dist <= epsilon))
        })
        .sum::<Result<u64>>()?;
    let n = n_ref as f64;
    let p = accepted as f64 / n;
    let std_error = if accepted == 0 {
        3.0 / n
    } else {
        (p * (1.0 - p) / n).sqrt()
    };
    Ok(AcceptEstimate {
        estimate: p,
        std_error,
        accepted,
        n_ref,
    })
}

/// Weighted functional of the first parameter coordinate. Quantiles use the
/// weighted empirical CDF with lower interpolation.
pub fn weighted_functional(sample: &WeightedSample, which: Functional) -> Result<f64> {
    if sample.is_empty() {
        return Err(AbcError::EmptySample);
    }
    let weights = sample.weights_or_equal();
    let total: f64 = weights.iter().sum();
    let xs: Vec<f64> = sample.iter().map(|p| p.theta[0]).collect();
    let mean = xs.iter().zip(&weights).map(|(x, w)| x * w).sum::<f64>() / total;
    match which {
        Functional::Mean => Ok(mean),
        Functional::Variance => Ok(xs
            .iter()
            .zip(&weights)
            .map(|(x, w)| w * (x - mean) * (x - mean))
            .sum::<f64>()
            / total),
        q => {
            let level = q.quantile_level().expect("quantile functional");
            let mut order: Vec<usize> = (0..xs.len()).collect();
            order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
            let threshold = level * total;
            let mut cum = 0.0;
            for &i in &order {
                cum += weights[i];
                if cum >= threshold * (1.0 - 1e-12) {
                    return Ok(xs[i]);
                }
            }
            Ok(xs[*order.last().expect("non-empty")])
        }
    }
}

/// Absolute error of a weighted-sample functional against a reference value.
pub fn l1_error(sample: &WeightedSample, which: Functional, oracle_value: f64) -> Result<f64> {
    Ok((weighted_functional(sample, which)? - oracle_value).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::particle::Particle;
    use proptest::prelude::*;

    fn at(xs: &[f64]) -> ParticleArray {
        xs.iter().map(|&x| Particle::new(vec![x], vec![x], 0.0)).collect()
    }

    #[test]
    fn ess_examples() {
        let distinct = at(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!((ess_aggregated(&distinct, None).unwrap() - 5.0).abs() < 1e-12);

        let copies = at(&[7.0; 6]);
        assert!((ess_aggregated(&copies, None).unwrap() - 1.0).abs() < 1e-12);

        // Groups with aggregated weights (2, 1, 1).
        let g = at(&[1.0, 1.0, 2.0, 3.0]);
        assert!((ess_aggregated(&g, None).unwrap() - 16.0 / 6.0).abs() < 1e-12);

        assert!(matches!(ess_aggregated(&ParticleArray::default(), None), Err(AbcError::EmptySample)));
    }

    #[test]
    fn ess_tolerance_merges_near_collisions() {
        let a = at(&[1.0, 1.0 + 1e-12, 2.0]);
        assert!((ess_aggregated(&a, None).unwrap() - 3.0).abs() < 1e-12);
        assert!((ess_aggregated(&a, Some(1e-9)).unwrap() - 9.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn gain_examples() {
        assert_eq!(gain_from_counts(1000, 1000.0, 1.0).unwrap(), 1.0);
        let r = gain_from_counts(23 * 100_000, 33285.0, 0.009).unwrap();
        assert!((r - 1.608).abs() < 1e-3, "{r}");
        assert!(matches!(gain_from_counts(10, 1.0, 0.0), Err(AbcError::ZeroAcceptProb)));
        // Doubling the cost halves the gain exactly.
        let a = gain_from_counts(777, 50.0, 0.3).unwrap();
        let b = gain_from_counts(1554, 50.0, 0.3).unwrap();
        assert_eq!(a, 2.0 * b);
    }

    #[test]
    fn l1_examples() {
        let point = at(&[0.25]);
        assert_eq!(l1_error(&point, Functional::Mean, 0.25).unwrap(), 0.0);
        assert_eq!(l1_error(&at(&[0.0, 2.0]), Functional::Mean, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn weighted_quantiles_lower_interpolation() {
        let s = at(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!(weighted_functional(&s, Functional::Median).unwrap(), 2.0);
        assert_eq!(weighted_functional(&s, Functional::Q1).unwrap(), 1.0);
        assert_eq!(weighted_functional(&s, Functional::Q3).unwrap(), 3.0);
        let mut w = s.clone();
        w.weights = Some(vec![0.7, 0.1, 0.1, 0.1]);
        assert_eq!(weighted_functional(&w, Functional::Median).unwrap(), 4.0);
    }

    proptest! {
        #[test]
        fn ess_bounded_and_scale_invariant(
            groups in prop::collection::vec((0u8..20, 0.01f64..5.0), 1..60),
            scale in 0.001f64..1000.0,
        ) {
            let particles: Vec<Particle> = groups
                .iter()
                .map(|&(g, _)| Particle::new(vec![g as f64], vec![0.0], 0.0))
                .collect();
            let weights: Vec<f64> = groups.iter().map(|&(_, w)| w).collect();
            let a = ParticleArray { particles, weights: Some(weights.clone()) };
            let ess = ess_aggregated(&a, None).unwrap();
            let distinct = a.distinct_count() as f64;
            prop_assert!(ess <= distinct * (1.0 + 1e-12));
            prop_assert!(distinct <= a.len() as f64);
            let b = ParticleArray {
                particles: a.particles.clone(),
                weights: Some(weights.iter().map(|w| w * scale).collect()),
            };
            let ess_b = ess_aggregated(&b, None).unwrap();
            prop_assert!((ess - ess_b).abs() <= 1e-9 * ess);
        }
    }
}

use rayon::prelude::*;

use crate::counter::Phase;
use crate::error::{AbcError, Result};
use crate::model::Context;
use crate::particle::{Particle, ParticleArray};
use crate::rng::Domain;

/// How the rejection sampler decides which draws to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Acceptance {
    /// Keep every draw with `dist <= epsilon`.
    Tolerance(f64),
    /// Keep the `floor(alpha * n_prior)` closest draws.
    Quantile(f64),
}

#[derive(Debug, Clone)]
pub struct RejectOutput {
    /// Accepted particles, ascending by distance.
    pub array: ParticleArray,
    /// The tolerance in force: the given one, or the realised order statistic.
    pub epsilon: f64,
    pub n_prior: u64,
}

impl RejectOutput {
    pub fn accepted(&self) -> usize {
        self.array.len()
    }
}

const CHUNK: u64 = 1 << 18;

/// Simulates `n_prior` prior-predictive draws and keeps those close to the
/// observation. Draw `i` uses its own stream, so the output does not depend
/// on the thread count.
pub fn abc_reject(ctx: &Context<'_>, n_prior: u64, accept: Acceptance) -> Result<RejectOutput> {
    if n_prior == 0 {
        return Err(AbcError::InvalidArgument("n_prior must be at least 1".into()));
    }
    let draw = |i: u64| -> Result<Particle> {
        let mut rng = ctx.streams.rng(Domain::Reject, 0, i);
        ctx.prior_particle(&mut rng, Phase::Rejection)
    };

    match accept {
        Acceptance::Tolerance(eps) => {
            if eps.is_nan() || eps < 0.0 {
                return Err(AbcError::InvalidArgument(format!("tolerance must be >= 0, got {eps}")));
            }
            let mut kept: Vec<Particle> = (0..n_prior)
                .into_par_iter()
                .map(draw)
                .filter(|p| p.as_ref().map_or(true, |p| p.dist <= eps))
                .collect::<Result<_>>()?;
            kept.sort_by(|a, b| a.dist.total_cmp(&b.dist));
            Ok(RejectOutput {
                array: ParticleArray::new(kept),
                epsilon: eps,
                n_prior,
            })
        }
        Acceptance::Quantile(alpha) => {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(AbcError::InvalidArgument(format!("quantile must be in (0, 1], got {alpha}")));
            }
            let k = (alpha * n_prior as f64 * (1.0 + 1e-12)).floor() as usize;
            if k == 0 {
                return Err(AbcError::InvalidArgument("alpha * n_prior must be at least 1".into()));
            }
            let mut best: Vec<Particle> = Vec::with_capacity(k.min(n_prior as usize));
            let mut start = 0;
            while start < n_prior {
                let end = (start + CHUNK).min(n_prior);
                let chunk: Vec<Particle> = (start..end).into_par_iter().map(draw).collect::<Result<_>>()?;
                best.extend(chunk);
                // Stable: earlier draws win ties.
                best.sort_by(|a, b| a.dist.total_cmp(&b.dist));
                best.truncate(k);
                start = end;
            }
            let epsilon = best.last().map_or(f64::INFINITY, |p| p.dist);
            Ok(RejectOutput {
                array: ParticleArray::new(best),
                epsilon,
                n_prior,
            })
        }
    }
}

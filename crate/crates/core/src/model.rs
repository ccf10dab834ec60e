//! The simulable-model contract.
//!
//! A model is a uniform prior on a box, a stochastic simulator that maps a
//! parameter to a vector of summary statistics, and the observed summaries.
//! Summaries are what the simulator returns; any projection of raw data
//! happens inside it.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::counter::{Phase, SimCounter};
use crate::error::{AbcError, Result};
use crate::particle::Particle;
use crate::rng::{Domain, StreamRng, Streams};

/// A stochastic simulator returning summary statistics.
///
/// Implementations must be callable concurrently; each call gets its own
/// random stream.
pub trait Simulator: Send + Sync {
    fn simulate(&self, theta: &[f64], rng: &mut StreamRng) -> std::result::Result<Vec<f64>, String>;
}

impl<F> Simulator for F
where
    F: Fn(&[f64], &mut StreamRng) -> std::result::Result<Vec<f64>, String> + Send + Sync,
{
    fn simulate(&self, theta: &[f64], rng: &mut StreamRng) -> std::result::Result<Vec<f64>, String> {
        self(theta, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// An immutable simulable model with a uniform prior on a box.
#[derive(Clone)]
pub struct ModelSpec {
    name: String,
    prior_box: Vec<Interval>,
    observed: Vec<f64>,
    scales: Vec<f64>,
    simulator: Arc<dyn Simulator>,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("prior_box", &self.prior_box)
            .field("observed", &self.observed)
            .field("scales", &self.scales)
            .finish_non_exhaustive()
    }
}

impl ModelSpec {
    pub fn new(
        name: impl Into<String>,
        prior_box: Vec<(f64, f64)>,
        observed: Vec<f64>,
        simulator: impl Simulator + 'static,
    ) -> Result<Self> {
        if prior_box.is_empty() {
            return Err(AbcError::InvalidModel("prior box has no coordinates".into()));
        }
        for (i, &(lo, hi)) in prior_box.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(AbcError::InvalidModel(format!(
                    "prior coordinate {i}: need finite lower < upper, got ({lo}, {hi})"
                )));
            }
        }
        if observed.is_empty() || observed.iter().any(|x| !x.is_finite()) {
            return Err(AbcError::InvalidModel(
                "observed summaries must be a non-empty finite vector".into(),
            ));
        }
        let scales = vec![1.0; observed.len()];
        Ok(Self {
            name: name.into(),
            prior_box: prior_box
                .into_iter()
                .map(|(lower, upper)| Interval { lower, upper })
                .collect(),
            observed,
            scales,
            simulator: Arc::new(simulator),
        })
    }

    /// Replaces the per-coordinate distance scales.
    pub fn with_scales(mut self, scales: Vec<f64>) -> Result<Self> {
        if scales.len() != self.observed.len() {
            return Err(AbcError::InvalidModel(format!(
                "{} scales for {} summaries",
                scales.len(),
                self.observed.len()
            )));
        }
        if scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(AbcError::InvalidModel("distance scales must be positive".into()));
        }
        self.scales = scales;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn param_dim(&self) -> usize {
        self.prior_box.len()
    }

    pub fn summary_dim(&self) -> usize {
        self.observed.len()
    }

    pub fn prior_box(&self) -> &[Interval] {
        &self.prior_box
    }

    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn in_prior(&self, theta: &[f64]) -> bool {
        theta.len() == self.prior_box.len()
            && theta.iter().zip(&self.prior_box).all(|(&x, b)| b.contains(x))
    }

    /// Volume of the prior box.
    pub fn prior_volume(&self) -> f64 {
        self.prior_box.iter().map(Interval::width).product()
    }

    /// Independent uniform draw on each box coordinate.
    pub fn prior_sample(&self, rng: &mut StreamRng) -> Vec<f64> {
        self.prior_box
            .iter()
            .map(|b| rng.random_range(b.lower..b.upper))
            .collect()
    }

    /// Scaled Euclidean distance of `z` to the observed summaries.
    pub fn distance(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.observed.len());
        z.iter()
            .zip(&self.observed)
            .zip(&self.scales)
            .map(|((&a, &b), &s)| {
                let d = (a - b) / s;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Runs the simulator once without touching any counter. Samplers go
    /// through [`Context::simulate`] instead.
    pub fn simulate_uncounted(&self, theta: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>> {
        if theta.len() != self.param_dim() {
            return Err(AbcError::InvalidArgument(format!(
                "theta has length {}, model expects {}",
                theta.len(),
                self.param_dim()
            )));
        }
        let z = self
            .simulator
            .simulate(theta, rng)
            .map_err(|message| AbcError::Simulator {
                theta: theta.to_vec(),
                message,
            })?;
        if z.len() != self.summary_dim() {
            return Err(AbcError::SummaryLength {
                expected: self.summary_dim(),
                got: z.len(),
            });
        }
        Ok(z)
    }
}

/// Everything a sampler needs to run: the model, the shared simulation
/// counter, and the stream root of the current replicate.
#[derive(Clone, Copy)]
pub struct Context<'a> {
    pub model: &'a ModelSpec,
    pub counter: &'a SimCounter,
    pub streams: Streams,
}

impl<'a> Context<'a> {
    pub fn new(model: &'a ModelSpec, counter: &'a SimCounter, streams: Streams) -> Self {
        Self {
            model,
            counter,
            streams,
        }
    }

    /// One counted simulation.
    pub fn simulate(&self, theta: &[f64], rng: &mut StreamRng, phase: Phase) -> Result<Vec<f64>> {
        self.counter.record(phase);
        self.model.simulate_uncounted(theta, rng)
    }

    /// Simulates at `theta` and returns the resulting particle.
    pub fn particle_at(&self, theta: Vec<f64>, rng: &mut StreamRng, phase: Phase) -> Result<Particle> {
        let z = self.simulate(&theta, rng, phase)?;
        let dist = self.model.distance(&z);
        Ok(Particle { theta, z, dist })
    }

    /// One draw from the prior-predictive.
    pub fn prior_particle(&self, rng: &mut StreamRng, phase: Phase) -> Result<Particle> {
        let theta = self.model.prior_sample(rng);
        self.particle_at(theta, rng, phase)
    }
}

/// Median absolute deviation of each summary coordinate over a pilot
/// prior-predictive sample. Zero deviations fall back to 1.
pub fn mad_scales(ctx: &Context<'_>, n_pilot: usize) -> Result<Vec<f64>> {
    if n_pilot < 2 {
        return Err(AbcError::InvalidArgument("pilot sample needs at least 2 draws".into()));
    }
    let zs: Vec<Vec<f64>> = (0..n_pilot as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ctx.streams.rng(Domain::Pilot, 0, i);
            let theta = ctx.model.prior_sample(&mut rng);
            ctx.simulate(&theta, &mut rng, Phase::Pilot)
        })
        .collect::<Result<_>>()?;
    let d = ctx.model.summary_dim();
    Ok((0..d)
        .map(|j| {
            let col: Vec<f64> = zs.iter().map(|z| z[j]).collect();
            let med = median(col.clone());
            let mad = median(col.iter().map(|x| (x - med).abs()).collect());
            if mad > 0.0 && mad.is_finite() {
                mad
            } else {
                1.0
            }
        })
        .collect())
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// One `(theta, z, d)` triple: a parameter point, its simulated summaries,
/// and the cached distance of those summaries to the observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub theta: Vec<f64>,
    pub z: Vec<f64>,
    pub dist: f64,
}

impl Particle {
    pub fn new(theta: Vec<f64>, z: Vec<f64>, dist: f64) -> Self {
        Self { theta, z, dist }
    }
}

/// Bitwise identity of a parameter vector. Resampling copies are exact
/// clones, so this is how duplicates are recognised.
pub(crate) fn theta_key(theta: &[f64]) -> Vec<u64> {
    theta.iter().map(|x| x.to_bits()).collect()
}

/// Ordered collection of particles with optional weights. Absent weights mean
/// equal weights.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParticleArray {
    pub particles: Vec<Particle>,
    pub weights: Option<Vec<f64>>,
}

impl ParticleArray {
    pub fn new(particles: Vec<Particle>) -> Self {
        Self {
            particles,
            weights: None,
        }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Particle> {
        self.particles.iter()
    }

    /// Weight of particle `i`; `1/len` when unweighted.
    pub fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Some(w) => w[i],
            None => 1.0 / self.particles.len() as f64,
        }
    }

    pub fn weights_or_equal(&self) -> Vec<f64> {
        match &self.weights {
            Some(w) => w.clone(),
            None => vec![1.0 / self.particles.len() as f64; self.particles.len()],
        }
    }

    /// Stable ascending sort by distance. Ties keep their current order.
    pub fn sort_by_distance(&mut self) {
        match self.weights.take() {
            None => self.particles.sort_by(|a, b| a.dist.total_cmp(&b.dist)),
            Some(w) => {
                let mut paired: Vec<(Particle, f64)> =
                    std::mem::take(&mut self.particles).into_iter().zip(w).collect();
                paired.sort_by(|a, b| a.0.dist.total_cmp(&b.0.dist));
                let (p, w): (Vec<_>, Vec<_>) = paired.into_iter().unzip();
                self.particles = p;
                self.weights = Some(w);
            }
        }
    }

    pub fn is_sorted_by_distance(&self) -> bool {
        self.particles.windows(2).all(|w| w[0].dist <= w[1].dist)
    }

    /// Largest cached distance, or `-inf` on an empty array.
    pub fn max_distance(&self) -> f64 {
        self.particles
            .iter()
            .map(|p| p.dist)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn thetas(&self) -> Vec<&[f64]> {
        self.particles.iter().map(|p| p.theta.as_slice()).collect()
    }

    /// Number of distinct parameter vectors (exact equality).
    pub fn distinct_count(&self) -> usize {
        let mut seen: HashMap<Vec<u64>, ()> = HashMap::with_capacity(self.particles.len());
        for p in &self.particles {
            seen.insert(theta_key(&p.theta), ());
        }
        seen.len()
    }

    /// One representative per distinct parameter vector, first occurrence order.
    pub fn distinct(&self) -> Vec<&Particle> {
        let mut seen = std::collections::HashSet::with_capacity(self.particles.len());
        self.particles
            .iter()
            .filter(|p| seen.insert(theta_key(&p.theta)))
            .collect()
    }

    /// Keeps particles with `dist <= epsilon`, preserving order and weights.
    pub fn filter_within(&self, epsilon: f64) -> ParticleArray {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.particles[i].dist <= epsilon)
            .collect();
        ParticleArray {
            particles: keep.iter().map(|&i| self.particles[i].clone()).collect(),
            weights: self
                .weights
                .as_ref()
                .map(|w| keep.iter().map(|&i| w[i]).collect()),
        }
    }
}

impl FromIterator<Particle> for ParticleArray {
    fn from_iter<I: IntoIterator<Item = Particle>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

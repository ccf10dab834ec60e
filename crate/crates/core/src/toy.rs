//! Gaussian-mixture toy model and its analytic posterior.
//!
//! `z = theta + e`, where `e` is standard normal with probability 1/2 and
//! normal with standard deviation 0.1 otherwise. The observation is `z = 0`
//! and the prior is uniform on `[-h, h]`, so the posterior is proportional
//! to `phi(theta) + 10 phi(10 theta)` on the prior support.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

use crate::error::{AbcError, Result};
use crate::model::ModelSpec;
use crate::rng::StreamRng;

/// Standard deviation of the narrow mixture component.
pub const NARROW_SD: f64 = 0.1;

/// Default prior half-width.
pub const DEFAULT_HALFWIDTH: f64 = 10.0;

const QUADRATURE_NODES: usize = 100_000;
const BISECTION_TOL: f64 = 1e-8;

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Draws one toy summary at `theta`.
pub fn toy_draw(theta: f64, rng: &mut StreamRng) -> f64 {
    let wide: bool = rng.random_bool(0.5);
    let e: f64 = rng.sample(StandardNormal);
    theta + if wide { e } else { NARROW_SD * e }
}

/// The toy model with prior `[-halfwidth, halfwidth]` and observation 0.
pub fn toy_model(halfwidth: f64) -> Result<ModelSpec> {
    if !(halfwidth.is_finite() && halfwidth > 0.0) {
        return Err(AbcError::InvalidModel(format!(
            "toy prior half-width must be positive, got {halfwidth}"
        )));
    }
    ModelSpec::new(
        "toy",
        vec![(-halfwidth, halfwidth)],
        vec![0.0],
        |theta: &[f64], rng: &mut StreamRng| Ok(vec![toy_draw(theta[0], rng)]),
    )
}

/// CDF of the toy summary at `theta`.
pub fn toy_likelihood_cdf(x: f64, theta: f64) -> f64 {
    0.5 * std_normal_cdf(x - theta) + 0.5 * std_normal_cdf((x - theta) / NARROW_SD)
}

/// `P(|z| <= eps)` at a fixed `theta`.
pub fn toy_accept_prob_at(theta: f64, eps: f64) -> f64 {
    if eps.is_infinite() {
        return 1.0;
    }
    toy_likelihood_cdf(eps, theta) - toy_likelihood_cdf(-eps, theta)
}

/// `P(|z| <= eps)` under the prior-predictive with prior `[-h, h]`, in
/// closed form via `int Phi(u) du = u Phi(u) + phi(u)`.
pub fn toy_accept_prob(eps: f64, halfwidth: f64) -> f64 {
    if eps.is_infinite() {
        return 1.0;
    }
    if eps <= 0.0 {
        return 0.0;
    }
    let g = |u: f64| u * std_normal_cdf(u) + std_normal_pdf(u);
    // int_{-h}^{h} Phi((a - theta)/s) dtheta
    let integral = |a: f64, s: f64| s * (g((a + halfwidth) / s) - g((a - halfwidth) / s));
    let component = |s: f64| integral(eps, s) - integral(-eps, s);
    (0.5 * component(1.0) + 0.5 * component(NARROW_SD)) / (2.0 * halfwidth)
}

/// Which functional of a one-dimensional distribution to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Functional {
    Mean,
    Median,
    Q1,
    Q3,
    Variance,
}

impl Functional {
    pub fn quantile_level(self) -> Option<f64> {
        match self {
            Functional::Median => Some(0.5),
            Functional::Q1 => Some(0.25),
            Functional::Q3 => Some(0.75),
            _ => None,
        }
    }
}

impl std::str::FromStr for Functional {
    type Err = AbcError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mean" => Functional::Mean,
            "median" => Functional::Median,
            "q1" => Functional::Q1,
            "q3" => Functional::Q3,
            "variance" => Functional::Variance,
            other => {
                return Err(AbcError::InvalidArgument(format!("unknown functional `{other}`")))
            }
        })
    }
}

/// Exact posterior of the toy model at observation 0, normalised by
/// composite trapezoid quadrature over the prior support.
#[derive(Debug, Clone)]
pub struct ToyPosterior {
    halfwidth: f64,
    step: f64,
    /// Cumulative trapezoid integral of the unnormalised density at each node.
    cumulative: Vec<f64>,
    normalizer: f64,
}

fn unnormalized(theta: f64) -> f64 {
    std_normal_pdf(theta) + 10.0 * std_normal_pdf(10.0 * theta)
}

impl ToyPosterior {
    pub fn new(halfwidth: f64) -> Result<Self> {
        if !(halfwidth.is_finite() && halfwidth > 0.0) {
            return Err(AbcError::InvalidArgument(format!(
                "support half-width must be positive, got {halfwidth}"
            )));
        }
        let n = QUADRATURE_NODES;
        let step = 2.0 * halfwidth / n as f64;
        let mut cumulative = Vec::with_capacity(n + 1);
        cumulative.push(0.0);
        let mut prev = unnormalized(-halfwidth);
        let mut acc = 0.0;
        for k in 1..=n {
            let cur = unnormalized(-halfwidth + k as f64 * step);
            acc += 0.5 * step * (prev + cur);
            cumulative.push(acc);
            prev = cur;
        }
        Ok(Self {
            halfwidth,
            step,
            normalizer: acc,
            cumulative,
        })
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn pdf(&self, theta: f64) -> f64 {
        if theta.abs() > self.halfwidth {
            return 0.0;
        }
        unnormalized(theta) / self.normalizer
    }

    pub fn cdf(&self, theta: f64) -> f64 {
        if theta <= -self.halfwidth {
            return 0.0;
        }
        if theta >= self.halfwidth {
            return 1.0;
        }
        let pos = (theta + self.halfwidth) / self.step;
        let k = (pos.floor() as usize).min(self.cumulative.len() - 2);
        let left = -self.halfwidth + k as f64 * self.step;
        let partial = 0.5 * (theta - left) * (unnormalized(left) + unnormalized(theta));
        ((self.cumulative[k] + partial) / self.normalizer).clamp(0.0, 1.0)
    }

    /// Quantile by bisection on the CDF.
    pub fn quantile(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = (-self.halfwidth, self.halfwidth);
        while hi - lo > BISECTION_TOL {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn moment(&self, f: impl Fn(f64) -> f64) -> f64 {
        let n = self.cumulative.len() - 1;
        let node = |k: usize| {
            let x = -self.halfwidth + k as f64 * self.step;
            f(x) * unnormalized(x)
        };
        let inner: f64 = (1..n).map(node).sum();
        self.step * (inner + 0.5 * (node(0) + node(n))) / self.normalizer
    }

    pub fn functional(&self, which: Functional) -> f64 {
        match which {
            Functional::Mean => self.moment(|x| x),
            Functional::Variance => {
                let m = self.moment(|x| x);
                self.moment(|x| (x - m) * (x - m))
            }
            q => self.quantile(q.quantile_level().expect("quantile functional")),
        }
    }
}

/// Normalised posterior density of the toy model.
pub fn toy_posterior_pdf(theta: f64, support_halfwidth: f64) -> Result<f64> {
    Ok(ToyPosterior::new(support_halfwidth)?.pdf(theta))
}

pub fn toy_posterior_functional(which: Functional, support_halfwidth: f64) -> Result<f64> {
    Ok(ToyPosterior::new(support_halfwidth)?.functional(which))
}

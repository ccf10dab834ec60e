//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Reject,
    Mcmc,
    NaiveSmc,
    SelfCalibrated,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Reject => "reject",
            SamplerKind::Mcmc => "mcmc",
            SamplerKind::NaiveSmc => "naive-smc",
            SamplerKind::SelfCalibrated => "self-calibrated",
        }
    }
}

impl FromStr for SamplerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "reject" => Ok(SamplerKind::Reject),
            "mcmc" => Ok(SamplerKind::Mcmc),
            "naive-smc" => Ok(SamplerKind::NaiveSmc),
            "self-calibrated" => Ok(SamplerKind::SelfCalibrated),
            other => Err(format!("unknown sampler `{other}`")),
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where the prior-predictive acceptance probability used by the gain factor
/// comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AcceptProbSource {
    /// Closed form (toy model only). Costs no simulations.
    Oracle,
    /// Monte Carlo estimate from this many reference simulations.
    Estimate(u64),
}

impl fmt::Display for AcceptProbSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AcceptProbSource::Oracle => f.write_str("oracle"),
            AcceptProbSource::Estimate(n) => write!(f, "estimate:{n}"),
        }
    }
}

impl FromStr for AcceptProbSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "oracle" {
            return Ok(AcceptProbSource::Oracle);
        }
        let n = s
            .strip_prefix("estimate:")
            .ok_or_else(|| format!("expected `oracle` or `estimate:<n_ref>`, got `{s}`"))?;
        n.parse::<u64>()
            .map(AcceptProbSource::Estimate)
            .map_err(|e| format!("bad n_ref `{n}`: {e}"))
    }
}

/// A validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: String,
    pub prior_halfwidth: f64,
    pub sampler: SamplerKind,
    pub n: usize,
    pub n_prior: u64,
    pub epsilon: Option<f64>,
    pub quantile: Option<f64>,
    pub rho_stop: f64,
    pub shrink_factor: f64,
    pub max_iters: usize,
    pub max_init_batches: usize,
    pub replicates: u64,
    pub seed: u64,
    pub workers: usize,
    pub output: PathBuf,
    pub schedule: Vec<f64>,
    pub mcmc_steps: usize,
    pub mcmc_sigma: Option<f64>,
    pub accept_prob: AcceptProbSource,
    pub literal_line_15: bool,
}

const KEYS: &[&str] = &[
    "model",
    "prior_halfwidth",
    "sampler",
    "n",
    "n_prior",
    "epsilon",
    "quantile",
    "rho_stop",
    "shrink_factor",
    "max_iters",
    "max_init_batches",
    "replicates",
    "seed",
    "workers",
    "output",
    "schedule",
    "mcmc_steps",
    "mcmc_sigma",
    "accept_prob_source",
    "literal_line_15",
];

/// Splits config text into key/value pairs. Rejects unknown and repeated
/// keys so typos surface immediately.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("line {}: expected `key = value`", lineno + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(CliError::config(format!("line {}: unknown key `{k}`", lineno + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(CliError::config(format!("line {}: duplicate key `{k}`", lineno + 1)));
        }
    }
    Ok(out)
}

/// Values that may come from outside the file. Each one wins over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
}

fn field<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: fmt::Display,
{
    map.get(key)
        .map(|v| v.parse::<T>().map_err(|e| CliError::config(format!("{key}: {e} (`{v}`)"))))
        .transpose()
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl RunConfig {
    pub fn from_file(path: &Path, ov: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text, ov)
    }

    pub fn from_text(text: &str, ov: &Overrides) -> Result<Self, CliError> {
        Self::from_pairs(&parse_pairs(text)?, ov)
    }

    pub fn from_pairs(map: &BTreeMap<String, String>, ov: &Overrides) -> Result<Self, CliError> {
        let sampler: SamplerKind = field(map, "sampler")?.ok_or_else(|| CliError::config("sampler is required"))?;
        let seed = match ov.seed {
            Some(s) => s,
            None => field(map, "seed")?.ok_or_else(|| CliError::config("seed is required"))?,
        };
        let schedule = match map.get("schedule") {
            None => Vec::new(),
            Some(s) => s
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::config(format!("schedule: {e}")))?,
        };
        let literal: Option<bool> = field(map, "literal_line_15")?;
        let cfg = RunConfig {
            model: map.get("model").cloned().unwrap_or_else(|| "toy".into()),
            prior_halfwidth: field(map, "prior_halfwidth")?.unwrap_or(abc_core::toy::DEFAULT_HALFWIDTH),
            sampler,
            n: field(map, "n")?.unwrap_or(1000),
            n_prior: field(map, "n_prior")?.unwrap_or(100_000),
            epsilon: field(map, "epsilon")?,
            quantile: field(map, "quantile")?,
            rho_stop: field(map, "rho_stop")?.unwrap_or(0.1),
            shrink_factor: field(map, "shrink_factor")?.unwrap_or(0.5),
            max_iters: field(map, "max_iters")?.unwrap_or(200),
            max_init_batches: field(map, "max_init_batches")?.unwrap_or(10_000),
            replicates: field(map, "replicates")?.unwrap_or(1),
            seed,
            workers: ov.workers.or(field(map, "workers")?).unwrap_or_else(default_workers),
            output: ov
                .output
                .clone()
                .or(field(map, "output")?)
                .unwrap_or_else(|| PathBuf::from("out")),
            schedule,
            mcmc_steps: field(map, "mcmc_steps")?.unwrap_or(20),
            mcmc_sigma: field(map, "mcmc_sigma")?,
            accept_prob: field(map, "accept_prob_source")?.unwrap_or(AcceptProbSource::Oracle),
            literal_line_15: literal.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::config(m));
        if self.model != "toy" {
            return bad(format!("unknown model `{}` (available: toy)", self.model));
        }
        if !(self.prior_halfwidth.is_finite() && self.prior_halfwidth > 0.0) {
            return bad(format!("prior_halfwidth must be positive, got {}", self.prior_halfwidth));
        }
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if let Some(e) = self.epsilon {
            if e.is_nan() || e < 0.0 {
                return bad(format!("epsilon must be >= 0, got {e}"));
            }
        }
        if let Some(q) = self.quantile {
            if !(q > 0.0 && q <= 1.0) {
                return bad(format!("quantile must be in (0, 1], got {q}"));
            }
        }
        if !(self.rho_stop > 0.0 && self.rho_stop <= 1.0) {
            return bad(format!("rho_stop must be in (0, 1], got {}", self.rho_stop));
        }
        if !(self.shrink_factor > 0.0 && self.shrink_factor < 1.0) {
            return bad(format!("shrink_factor must be in (0, 1), got {}", self.shrink_factor));
        }
        if self.max_init_batches < 2 {
            return bad("max_init_batches must be at least 2".into());
        }
        if let Some(s) = self.mcmc_sigma {
            if !(s.is_finite() && s > 0.0) {
                return bad(format!("mcmc_sigma must be positive, got {s}"));
            }
        }
        if let AcceptProbSource::Estimate(n) = self.accept_prob {
            if n < 100 {
                return bad("accept_prob_source estimate needs n_ref >= 100".into());
            }
        }
        match self.sampler {
            SamplerKind::Reject => match (self.epsilon, self.quantile) {
                (Some(_), Some(_)) => return bad("reject: give either epsilon or quantile, not both".into()),
                (None, None) => return bad("reject: epsilon or quantile is required".into()),
                _ => {}
            },
            SamplerKind::Mcmc => {
                if self.epsilon.is_none() {
                    return bad("mcmc: epsilon is required".into());
                }
            }
            SamplerKind::NaiveSmc => {
                if self.schedule.is_empty() {
                    return bad("naive-smc: schedule is required".into());
                }
                if self.schedule.windows(2).any(|w| !(w[1] < w[0])) {
                    return bad("naive-smc: schedule must be strictly decreasing".into());
                }
            }
            SamplerKind::SelfCalibrated => {
                if self.epsilon.is_none() {
                    return bad("self-calibrated: epsilon is required".into());
                }
            }
        }
        if self.sampler != SamplerKind::Reject && self.quantile.is_some() {
            return bad("quantile applies to the reject sampler only".into());
        }
        Ok(())
    }

    /// Resolved settings echoed into every trace. Worker count and output
    /// location are left out because they must not change the artifacts.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("model", self.model.clone());
        put("prior_halfwidth", format!("{:?}", self.prior_halfwidth));
        put("sampler", self.sampler.to_string());
        put("seed", self.seed.to_string());
        put("replicates", self.replicates.to_string());
        put("accept_prob_source", self.accept_prob.to_string());
        match self.sampler {
            SamplerKind::Reject => {
                put("n_prior", self.n_prior.to_string());
                if let Some(e) = self.epsilon {
                    put("epsilon", format!("{e:?}"));
                }
                if let Some(q) = self.quantile {
                    put("quantile", format!("{q:?}"));
                }
            }
            SamplerKind::Mcmc => {
                put("n", self.n.to_string());
                put("n_prior", self.n_prior.to_string());
                put("epsilon", format!("{:?}", self.epsilon.unwrap_or(f64::NAN)));
                put("mcmc_steps", self.mcmc_steps.to_string());
                if let Some(s) = self.mcmc_sigma {
                    put("mcmc_sigma", format!("{s:?}"));
                }
            }
            SamplerKind::NaiveSmc => {
                put("n", self.n.to_string());
                let s: Vec<String> = self.schedule.iter().map(|x| format!("{x:?}")).collect();
                put("schedule", s.join(","));
            }
            SamplerKind::SelfCalibrated => {
                put("n", self.n.to_string());
                put("epsilon", format!("{:?}", self.epsilon.unwrap_or(f64::NAN)));
                put("rho_stop", format!("{:?}", self.rho_stop));
                put("shrink_factor", format!("{:?}", self.shrink_factor));
                put("max_iters", self.max_iters.to_string());
                put("max_init_batches", self.max_init_batches.to_string());
                put("literal_line_15", self.literal_line_15.to_string());
            }
        }
        m
    }

    /// The tolerance the run targets, when it is fixed in advance.
    pub fn target_epsilon(&self) -> Option<f64> {
        match self.sampler {
            SamplerKind::NaiveSmc => self.schedule.last().copied(),
            _ => self.epsilon,
        }
    }
}

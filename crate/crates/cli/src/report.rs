//! Cross-sampler comparison table and per-iteration gain series.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use abc_core::diagnostics::gain_from_counts;
use abc_core::rng::replicate_seed;
use abc_core::{Context, RunTrace, SimCounter, Streams};

use crate::artifacts::{fmt_f64, read_trace};
use crate::config::{RunConfig, SamplerKind};
use crate::error::CliError;
use crate::runner::{accept_prob, build_model, run_experiment, thread_pool, trace_path};

/// Mean cost and ESS of one sampler over its replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct Table1Row {
    pub sampler: String,
    pub epsilon: f64,
    pub replicates: u64,
    pub cost: f64,
    pub ess: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Runs each configuration and tabulates mean cost (algorithm simulations)
/// and mean aggregated ESS. All configurations must target the same
/// tolerance.
pub fn table1_report(configs: &[RunConfig]) -> Result<Vec<Table1Row>, CliError> {
    let first = configs.first().ok_or_else(|| CliError::config("table1 needs at least one config"))?;
    let eps = first
        .target_epsilon()
        .ok_or_else(|| CliError::config("table1 configs must fix epsilon"))?;
    for c in configs {
        if c.model != first.model || c.prior_halfwidth != first.prior_halfwidth {
            return Err(CliError::config("table1 configs must share the model"));
        }
        match c.target_epsilon() {
            Some(e) if e == eps => {}
            other => {
                return Err(CliError::config(format!(
                    "table1 configs must share epsilon: {eps} vs {other:?}"
                )))
            }
        }
    }
    configs
        .iter()
        .map(|c| {
            let rows = run_experiment(c)?;
            Ok(Table1Row {
                sampler: c.sampler.to_string(),
                epsilon: eps,
                replicates: c.replicates,
                cost: mean(rows.iter().map(|r| r.total_sims as f64)),
                ess: mean(rows.iter().map(|r| r.ess)),
            })
        })
        .collect()
}

pub fn format_table1(rows: &[Table1Row]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<18} {:>14} {:>10}", "sampler", "cost", "ess");
    for r in rows {
        let _ = writeln!(s, "{:<18} {:>14.0} {:>10.0}", r.sampler, r.cost, r.ess);
    }
    s
}

pub fn write_table1(path: &Path, rows: &[Table1Row]) -> Result<(), CliError> {
    let mut s = String::from("sampler,epsilon,replicates,cost,ess\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.sampler,
            fmt_f64(r.epsilon),
            r.replicates,
            fmt_f64(r.cost),
            fmt_f64(r.ess)
        );
    }
    fs::write(path, s)?;
    Ok(())
}

/// Gain after the initialisation stage (`iter = 0`) or after iteration `iter`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainRow {
    pub iter: usize,
    pub eps: f64,
    /// `1/K` for the initialisation row.
    pub alpha: f64,
    /// NaN for the initialisation row.
    pub rho: f64,
    pub cumulative_sims: u64,
    pub ess: f64,
    pub gain: f64,
    pub stop_iter: usize,
}

/// First iteration whose estimated move rate is at or below `rho_stop`.
/// Falls back to the last iteration run (0 when initialisation was terminal).
pub fn stop_iter(trace: &RunTrace, rho_stop: f64) -> usize {
    trace
        .iterations
        .iter()
        .find(|r| r.rho_hat <= rho_stop)
        .or(trace.iterations.last())
        .map_or(0, |r| r.t)
}

/// Builds the gain series of a self-calibrated trace. `accept` maps a
/// tolerance to its prior-predictive acceptance probability.
pub fn gain_rows(
    trace: &RunTrace,
    n: usize,
    rho_stop: f64,
    mut accept: impl FnMut(f64) -> Result<Option<f64>, CliError>,
) -> Result<Vec<GainRow>, CliError> {
    let init = trace
        .init
        .as_ref()
        .ok_or_else(|| CliError::Report("trace has no initialisation record".into()))?;
    let stop = stop_iter(trace, rho_stop);
    let mut gain = |eps: f64, ess: f64, sims: u64| -> Result<f64, CliError> {
        match accept(eps)? {
            Some(p) => Ok(gain_from_counts(sims, ess, p)?),
            None => Ok(f64::NAN),
        }
    };
    let init_sims = (init.batches * n) as u64;
    let mut rows = vec![GainRow {
        iter: 0,
        eps: init.epsilon0,
        alpha: 1.0 / init.batches as f64,
        rho: f64::NAN,
        cumulative_sims: init_sims,
        ess: init.ess,
        gain: gain(init.epsilon0, init.ess, init_sims)?,
        stop_iter: stop,
    }];
    let mut sims = init_sims;
    for r in &trace.iterations {
        sims += r.sims_used;
        rows.push(GainRow {
            iter: r.t,
            eps: r.epsilon,
            alpha: r.alpha,
            rho: r.rho_hat,
            cumulative_sims: sims,
            ess: r.ess,
            gain: gain(r.epsilon, r.ess, sims)?,
            stop_iter: stop,
        });
    }
    Ok(rows)
}

pub const GAIN_HEADER: &str = "replicate,iter,eps,alpha,rho,cumulative_sims,ess,gain,stop_iter";

/// Runs a self-calibrated configuration and writes `gain_by_iter.csv` next
/// to the usual run artifacts. Returns the series of every replicate.
pub fn gain_curve(cfg: &RunConfig) -> Result<Vec<Vec<GainRow>>, CliError> {
    if cfg.sampler != SamplerKind::SelfCalibrated {
        return Err(CliError::config("gain-curve needs sampler = self-calibrated"));
    }
    run_experiment(cfg)?;
    let model = build_model(cfg)?;
    let pool = thread_pool(cfg.workers)?;
    let mut all = Vec::new();
    let mut csv = format!("{GAIN_HEADER}\n");
    for r in 1..=cfg.replicates {
        let trace = read_trace(&trace_path(&cfg.output, r))?;
        let counter = SimCounter::new();
        let ctx = Context::new(&model, &counter, Streams::new(replicate_seed(cfg.seed, r)));
        let rows = pool.install(|| gain_rows(&trace, cfg.n, cfg.rho_stop, |eps| accept_prob(cfg, &ctx, eps)))?;
        for g in &rows {
            let _ = writeln!(
                csv,
                "{r},{},{},{},{},{},{},{},{}",
                g.iter,
                fmt_f64(g.eps),
                fmt_f64(g.alpha),
                fmt_f64(g.rho),
                g.cumulative_sims,
                fmt_f64(g.ess),
                fmt_f64(g.gain),
                g.stop_iter
            );
        }
        all.push(rows);
    }
    fs::write(cfg.output.join("gain_by_iter.csv"), csv)?;
    Ok(all)
}

//! On-disk formats: particle CSV, trace JSON, summary CSV.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a file
//! back yields bit-identical values.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use abc_core::{Particle, ParticleArray, RunTrace};

use crate::error::CliError;

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn parse_f64(s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| CliError::Report(format!("bad float `{s}`: {e}")))
}

pub fn particles_header(param_dim: usize, summary_dim: usize) -> String {
    let mut cols: Vec<String> = (1..=param_dim).map(|i| format!("theta_{i}")).collect();
    cols.extend((1..=summary_dim).map(|i| format!("z_{i}")));
    cols.push("dist".into());
    cols.push("weight".into());
    cols.join(",")
}

pub fn write_particles(path: &Path, array: &ParticleArray, param_dim: usize, summary_dim: usize) -> Result<(), CliError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", particles_header(param_dim, summary_dim))?;
    for (i, p) in array.iter().enumerate() {
        let mut fields: Vec<String> = p.theta.iter().chain(&p.z).map(|&x| fmt_f64(x)).collect();
        fields.push(fmt_f64(p.dist));
        fields.push(fmt_f64(array.weight(i)));
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a particle dump. Weights are always returned explicitly.
pub fn read_particles(path: &Path) -> Result<ParticleArray, CliError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::Report("empty particle file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let p = cols.iter().filter(|c| c.starts_with("theta_")).count();
    let d = cols.iter().filter(|c| c.starts_with("z_")).count();
    if cols.len() != p + d + 2 {
        return Err(CliError::Report(format!("unexpected particle header `{header}`")));
    }
    let mut particles = Vec::new();
    let mut weights = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let v = line.split(',').map(parse_f64).collect::<Result<Vec<_>, _>>()?;
        if v.len() != cols.len() {
            return Err(CliError::Report(format!("row has {} fields, expected {}", v.len(), cols.len())));
        }
        particles.push(Particle::new(v[..p].to_vec(), v[p..p + d].to_vec(), v[p + d]));
        weights.push(v[p + d + 1]);
    }
    Ok(ParticleArray {
        particles,
        weights: Some(weights),
    })
}

pub fn write_trace(path: &Path, trace: &RunTrace) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(trace).map_err(|e| CliError::Report(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<RunTrace, CliError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Report(format!("{}: {e}", path.display())))
}

/// One line of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub replicate: u64,
    pub total_sims: u64,
    pub final_eps: f64,
    pub ess: f64,
    /// NaN when no acceptance probability was available.
    pub gain: f64,
    pub iterations: usize,
    pub wall_ms: u64,
}

pub const SUMMARY_HEADER: &str = "replicate,total_sims,final_eps,ess,gain,iterations,wall_ms";

impl SummaryRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.replicate,
            self.total_sims,
            fmt_f64(self.final_eps),
            fmt_f64(self.ess),
            fmt_f64(self.gain),
            self.iterations,
            self.wall_ms
        )
    }

    pub fn from_csv(line: &str) -> Result<Self, CliError> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(CliError::Report(format!("summary row `{line}` has {} fields", f.len())));
        }
        let int = |s: &str| {
            s.parse::<u64>()
                .map_err(|e| CliError::Report(format!("bad integer `{s}`: {e}")))
        };
        Ok(SummaryRow {
            replicate: int(f[0])?,
            total_sims: int(f[1])?,
            final_eps: parse_f64(f[2])?,
            ess: parse_f64(f[3])?,
            gain: parse_f64(f[4])?,
            iterations: int(f[5])? as usize,
            wall_ms: int(f[6])?,
        })
    }
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<(), CliError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.to_csv())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>, CliError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(SUMMARY_HEADER) => {}
        other => return Err(CliError::Report(format!("unexpected summary header {other:?}"))),
    }
    lines.filter(|l| !l.is_empty()).map(SummaryRow::from_csv).collect()
}

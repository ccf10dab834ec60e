//! Config-driven experiment runner for the `abc-core` samplers.
//!
//! A run reads a flat `key = value` file, executes the configured sampler
//! for each replicate and writes per-replicate particle dumps and traces plus
//! a summary table. See [`run_experiment`], [`table1_report`] and
//! [`gain_curve`].

pub mod artifacts;
pub mod config;
pub mod error;
pub mod report;
pub mod runner;

pub use config::{AcceptProbSource, Overrides, RunConfig, SamplerKind};
pub use error::CliError;
pub use report::{gain_curve, gain_rows, table1_report, GainRow, Table1Row};
pub use artifacts::SummaryRow;
pub use runner::{run_experiment, run_replicate, ReplicateOutput};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::counter::CounterSnapshot;

/// Serde adapter writing non-finite floats as strings, since JSON numbers
/// cannot carry them.
pub mod float_repr {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad float `{other}`"))),
            },
        }
    }

    pub mod option {
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match x {
                Some(v) => super::serialize(v, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            #[derive(Deserialize)]
            struct W(#[serde(with = "super")] f64);
            Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
        }
    }
}

/// Outcome of one sequential iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    #[serde(with = "float_repr")]
    pub epsilon: f64,
    pub alpha: f64,
    pub rho_hat: f64,
    pub sims_used: u64,
    /// Distinct parameter vectors in the array produced by this iteration.
    pub distinct_count: usize,
    pub ess: f64,
}

/// Summary of the initialisation stage of the self-calibrated sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitSummary {
    pub batches: usize,
    pub v_prior: f64,
    pub v_final: f64,
    #[serde(with = "float_repr")]
    pub epsilon0: f64,
    pub terminal: bool,
    pub distinct_count: usize,
    pub ess: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// Initialisation reached the target tolerance; no sequential stage.
    InitTerminal,
    /// Estimated move probability fell to the stop threshold.
    RhoBelowThreshold,
    TargetReached,
    MaxIterations,
    /// Sequential stage switched off (`rho_stop = 1`).
    SequentialDisabled,
    /// Fixed-schedule and single-pass samplers.
    Completed,
}

/// Everything measured during one sampler run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub sampler: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitSummary>,
    pub iterations: Vec<IterationRecord>,
    pub counter: CounterSnapshot,
    /// Algorithm simulations (equals `counter.total`).
    pub total_sims: u64,
    #[serde(with = "float_repr")]
    pub final_epsilon: f64,
    #[serde(default, with = "float_repr::option", skip_serializing_if = "Option::is_none")]
    pub target_epsilon: Option<f64>,
    pub target_reached: bool,
    pub final_size: usize,
    pub final_distinct: usize,
    pub final_ess: f64,
    pub stop_reason: StopReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accept_prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_factor: Option<f64>,
}

impl RunTrace {
    /// Number of sequential iterations run.
    pub fn iteration_count(&self) -> usize {
        self.iterations.len()
    }
}

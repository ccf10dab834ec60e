use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

/// Which part of a run a simulation is charged to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Rejection,
    Init,
    Calibration,
    Move,
    Mcmc,
    Naive,
    /// Reference simulations for acceptance-probability estimates. Not part
    /// of any algorithm's cost.
    Reference,
    /// Pilot simulations for distance scales.
    Pilot,
}

impl Phase {
    pub const ALL: [Phase; 8] = [
        Phase::Rejection,
        Phase::Init,
        Phase::Calibration,
        Phase::Move,
        Phase::Mcmc,
        Phase::Naive,
        Phase::Reference,
        Phase::Pilot,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Phase::Rejection => "rejection",
            Phase::Init => "init",
            Phase::Calibration => "calibration",
            Phase::Move => "move",
            Phase::Mcmc => "mcmc",
            Phase::Naive => "naive",
            Phase::Reference => "reference",
            Phase::Pilot => "pilot",
        }
    }

    /// Whether simulations of this phase count towards algorithm cost.
    pub fn is_algorithm_cost(self) -> bool {
        !matches!(self, Phase::Reference | Phase::Pilot)
    }
}

/// Atomic per-phase simulation counter shared by all workers of a run.
#[derive(Debug, Default)]
pub struct SimCounter {
    counts: [AtomicU64; 8],
}

impl SimCounter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn record(&self, phase: Phase) {
        self.counts[phase as usize].fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self, phase: Phase) -> u64 {
        self.counts[phase as usize].load(Ordering::Relaxed)
    }

    /// Simulations charged to the algorithm (reference and pilot excluded).
    pub fn algorithm_total(&self) -> u64 {
        Phase::ALL
            .iter()
            .filter(|p| p.is_algorithm_cost())
            .map(|&p| self.get(p))
            .sum()
    }

    pub fn snapshot(&self) -> CounterSnapshot {
        let per_phase: BTreeMap<String, u64> = Phase::ALL
            .iter()
            .filter(|&&p| self.get(p) > 0)
            .map(|&p| (p.label().to_string(), self.get(p)))
            .collect();
        CounterSnapshot {
            total: self.algorithm_total(),
            excluded: Phase::ALL
                .iter()
                .filter(|p| !p.is_algorithm_cost())
                .map(|&p| self.get(p))
                .sum(),
            per_phase,
        }
    }
}

/// Serializable counter state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterSnapshot {
    /// Algorithm cost: sum over the cost-bearing phases.
    pub total: u64,
    /// Reference and pilot simulations, reported but not charged.
    pub excluded: u64,
    pub per_phase: BTreeMap<String, u64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rayon::prelude::*;

    #[test]
    fn concurrent_increments_are_exact() {
        let c = SimCounter::new();
        (0..100_000u32).into_par_iter().for_each(|i| {
            c.record(if i % 3 == 0 { Phase::Init } else { Phase::Reference });
        });
        assert_eq!(c.get(Phase::Init), 33_334);
        assert_eq!(c.get(Phase::Reference), 66_666);
        let snap = c.snapshot();
        assert_eq!(snap.total, 33_334);
        assert_eq!(snap.excluded, 66_666);
        assert_eq!(snap.per_phase.values().sum::<u64>(), 100_000);
    }
}

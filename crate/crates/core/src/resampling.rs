//! Residual resampling with a first-copy layout.
//!
//! Source `i` receives `floor(N w_i)` deterministic copies. The remaining
//! `R = N - sum floor(N w_i)` slots go to distinct sources picked by
//! systematic selection over the residual fractions `N w_i - floor(N w_i)`,
//! so every source ends with `floor(N w_i)` or `floor(N w_i) + 1` copies and
//! the expected count is exactly `N w_i`.
//!
//! The plan puts one copy of each selected source first, in source order.
//! With equal weights and `m <= N` every source is selected, so slots
//! `0..m` reproduce the input array unchanged.

use rand::Rng;

use crate::error::{AbcError, Result};
use crate::rng::StreamRng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResamplePlan {
    pub source_count: usize,
    pub target_count: usize,
    /// `assignment[j]` is the (0-based) source copied into slot `j`.
    pub assignment: Vec<usize>,
}

impl ResamplePlan {
    pub fn copy_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.source_count];
        for &a in &self.assignment {
            counts[a] += 1;
        }
        counts
    }
}

pub fn residual_resample(weights: &[f64], target_count: usize, rng: &mut StreamRng) -> Result<ResamplePlan> {
    let m = weights.len();
    if m == 0 {
        return Err(AbcError::InvalidArgument("no weights to resample".into()));
    }
    if m > target_count {
        return Err(AbcError::InvalidArgument(format!(
            "cannot resample {m} sources into {target_count} slots"
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(AbcError::InvalidArgument("weights must be finite and non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(AbcError::InvalidArgument("weights sum to zero".into()));
    }

    let n = target_count as f64;
    let mut counts = Vec::with_capacity(m);
    let mut residuals = Vec::with_capacity(m);
    for &w in weights {
        let expected = n * w / total;
        let base = expected.floor();
        counts.push(base as usize);
        residuals.push(expected - base);
    }
    let assigned: usize = counts.iter().sum();
    let remainder = target_count.saturating_sub(assigned);
    let selected = systematic_select(&residuals, remainder, rng);

    let mut is_selected = vec![false; m];
    for &i in &selected {
        is_selected[i] = true;
    }
    let mut assignment = Vec::with_capacity(target_count);
    // First copy of every source that receives at least one slot.
    for i in 0..m {
        if counts[i] > 0 || is_selected[i] {
            assignment.push(i);
        }
    }
    // Remaining deterministic copies.
    for (i, &c) in counts.iter().enumerate() {
        assignment.extend(std::iter::repeat_n(i, c.saturating_sub(1)));
    }
    // Residual copies of sources whose first slot came from the deterministic part.
    for &i in &selected {
        if counts[i] > 0 {
            assignment.push(i);
        }
    }
    debug_assert_eq!(assignment.len(), target_count);

    Ok(ResamplePlan {
        source_count: m,
        target_count,
        assignment,
    })
}

/// Equal-weight resampling of `m` survivors into `target_count` slots.
pub fn residual_resample_equal(m: usize, target_count: usize, rng: &mut StreamRng) -> Result<ResamplePlan> {
    residual_resample(&vec![1.0; m], target_count, rng)
}

/// Picks `k` distinct indices with inclusion probabilities proportional to
/// `fractions` (each in `[0, 1)`, summing to about `k`).
fn systematic_select(fractions: &[f64], k: usize, rng: &mut StreamRng) -> Vec<usize> {
    if k == 0 {
        return Vec::new();
    }
    let sum: f64 = fractions.iter().sum();
    let scale = k as f64 / sum;
    let u: f64 = rng.random();
    let mut picked = Vec::with_capacity(k);
    let mut cum = 0.0;
    let mut next = u;
    for (i, &f) in fractions.iter().enumerate() {
        cum += f * scale;
        if next < cum && picked.len() < k {
            picked.push(i);
            // Fractions are < 1, so at most one pointer falls in each cell;
            // skip any second pointer that rounding might place here.
            while next < cum {
                next += 1.0;
            }
        }
    }
    if picked.len() < k {
        // Rounding at the far end: hand out the largest unpicked fractions.
        let mut rest: Vec<usize> = (0..fractions.len()).filter(|i| !picked.contains(i)).collect();
        rest.sort_by(|&a, &b| fractions[b].total_cmp(&fractions[a]));
        picked.extend(rest.into_iter().take(k - picked.len()));
        picked.sort_unstable();
    }
    picked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Domain, Streams};
    use proptest::prelude::*;

    fn rng(seed: u64) -> StreamRng {
        Streams::new(seed).rng(Domain::Test, 0, 0)
    }

    #[test]
    fn equal_weights_full_size_is_identity() {
        let plan = residual_resample_equal(7, 7, &mut rng(1)).unwrap();
        assert_eq!(plan.assignment, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn two_into_four() {
        let plan = residual_resample_equal(2, 4, &mut rng(2)).unwrap();
        assert_eq!(&plan.assignment[..2], &[0, 1]);
        assert_eq!(plan.copy_counts(), vec![2, 2]);
    }

    #[test]
    fn deterministic_copies_only() {
        let plan = residual_resample(&[0.5, 0.3, 0.2], 10, &mut rng(3)).unwrap();
        assert_eq!(plan.copy_counts(), vec![5, 3, 2]);
        assert_eq!(&plan.assignment[..3], &[0, 1, 2]);
    }

    #[test]
    fn errors() {
        assert!(residual_resample(&[0.0, 0.0], 4, &mut rng(0)).is_err());
        assert!(residual_resample(&[1.0, 1.0, 1.0], 2, &mut rng(0)).is_err());
        assert!(residual_resample(&[], 2, &mut rng(0)).is_err());
        assert!(residual_resample(&[1.0, -0.5], 2, &mut rng(0)).is_err());
    }

    #[test]
    fn unbiased_copy_counts() {
        let w = [0.6, 0.3, 0.1];
        let n = 10usize;
        let reps = 10_000;
        let mut sums = [0usize; 3];
        // Weights that leave a residual part.
        let w2 = [0.55, 0.32, 0.13];
        let mut sums2 = [0usize; 3];
        for r in 0..reps {
            let mut g = Streams::new(9).rng(Domain::Test, 0, r as u64);
            for (s, c) in sums.iter_mut().zip(residual_resample(&w, n, &mut g).unwrap().copy_counts()) {
                *s += c;
            }
            for (s, c) in sums2.iter_mut().zip(residual_resample(&w2, n, &mut g).unwrap().copy_counts()) {
                *s += c;
            }
        }
        for (weights, sums) in [(w, sums), (w2, sums2)] {
            for i in 0..3 {
                let mean = sums[i] as f64 / reps as f64;
                let expect = n as f64 * weights[i];
                let tol = 3.0 * (weights[i] * (1.0 - weights[i]) * n as f64).sqrt() / 100.0;
                assert!((mean - expect).abs() <= tol, "source {i}: {mean} vs {expect}");
            }
        }
    }

    proptest! {
        #[test]
        fn counts_within_floor_bounds(
            weights in prop::collection::vec(0.0f64..1.0, 1..40),
            extra in 0usize..200,
            seed in any::<u64>(),
        ) {
            prop_assume!(weights.iter().sum::<f64>() > 1e-9);
            let n = weights.len() + extra;
            let plan = residual_resample(&weights, n, &mut rng(seed)).unwrap();
            prop_assert_eq!(plan.assignment.len(), n);
            let total: f64 = weights.iter().sum();
            for (i, c) in plan.copy_counts().into_iter().enumerate() {
                let base = (n as f64 * weights[i] / total).floor() as usize;
                prop_assert!(c == base || c == base + 1, "source {} got {} (floor {})", i, c, base);
            }
        }

        #[test]
        fn equal_weight_layout(m in 1usize..300, extra in 0usize..700, seed in any::<u64>()) {
            let n = m + extra;
            let plan = residual_resample_equal(m, n, &mut rng(seed)).unwrap();
            prop_assert_eq!(&plan.assignment[..m], &(0..m).collect::<Vec<_>>()[..]);
            prop_assert!(plan.assignment.iter().all(|&a| a < m));
        }
    }
}

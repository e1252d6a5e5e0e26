//! Monte-Carlo verification of selectability claims, exact enumeration
//! oracles for tiny instances, and worst-order search.
//!
//! Trials run in fixed-size blocks; each block owns per-trial streams derived
//! from the seed and the trial index, and block results are merged in block
//! order. The worker count therefore never changes a result.

mod adversary;
mod impossibility;
mod report;
mod selectability;

pub use adversary::{
    order_value, worst_order_value, AdversarySearchResult, Scenario, SearchMode, EXHAUSTIVE_ORDER_LIMIT,
};
pub use impossibility::{
    knapsack_deterministic_impossibility, parse_rational, ImpossibilityResult, IMPOSSIBILITY_LIMIT,
};
pub use report::{write_csv, write_json, CsvRow, TrialValue};
pub use selectability::{
    brute_force_selectability, estimate_prepared, estimate_selectability, quantifier_selectable, ElementReport,
    SelectabilityOptions, SelectabilityReport, BRUTE_FORCE_LIMIT,
};

use rayon::prelude::*;
use serde::Serialize;

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.576;

/// Trials per block of the parallel engine.
pub const BLOCK_SIZE: u64 = 1024;

/// Runs `f` on a pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(w) if w > 0 => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(f),
            Err(err) => {
                log::warn!("could not build a {w}-thread pool ({err}); using the global pool");
                f()
            }
        },
        _ => f(),
    }
}

/// Folds `step` over trials `0..trials` in blocks, merging block
/// accumulators in block order.
pub fn run_trials<A, I, S, M>(trials: u64, workers: Option<usize>, init: I, step: S, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    S: Fn(&mut A, u64) + Sync + Send,
    M: Fn(&mut A, A),
{
    let blocks = trials.div_ceil(BLOCK_SIZE);
    let parts: Vec<A> = with_workers(workers, || {
        (0..blocks)
            .into_par_iter()
            .map(|k| {
                let mut acc = init();
                for t in k * BLOCK_SIZE..((k + 1) * BLOCK_SIZE).min(trials) {
                    step(&mut acc, t);
                }
                acc
            })
            .collect()
    });
    let mut acc = init();
    for p in parts {
        merge(&mut acc, p);
    }
    acc
}

/// Running sums for a sample mean.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeanAccumulator {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(&mut self, other: MeanAccumulator) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn estimate(&self) -> MeanEstimate {
        let n = self.count.max(1) as f64;
        let mean = self.sum / n;
        let var = if self.count > 1 {
            ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        MeanEstimate {
            mean,
            ci_halfwidth: Z99 * (var / n).sqrt(),
            samples: self.count,
        }
    }
}

/// A sample mean with its 99% normal-approximation half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub ci_halfwidth: f64,
    pub samples: u64,
}

/// `z·sqrt(p(1-p)/T)`.
pub fn binomial_halfwidth(p: f64, trials: u64) -> f64 {
    Z99 * (p * (1.0 - p) / trials.max(1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worker_count_does_not_change_sums() {
        let run = |w| {
            run_trials(
                10_000,
                Some(w),
                || 0.0f64,
                |acc, t| *acc += 1.0 / (t as f64 + 1.0),
                |a, b| *a += b,
            )
        };
        let one = run(1);
        assert_eq!(one.to_bits(), run(3).to_bits());
        assert_eq!(one.to_bits(), run(8).to_bits());
    }

    #[test]
    fn mean_accumulator_matches_direct() {
        let mut acc = MeanAccumulator::default();
        for v in [1.0, 2.0, 3.0, 4.0] {
            acc.push(v);
        }
        let e = acc.estimate();
        assert_eq!(e.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((e.ci_halfwidth - Z99 * sd / 2.0).abs() < 1e-12);
    }
}

//! End-to-end applications of greedy OCRSs: prophet inequalities over
//! matroids and oblivious-order stochastic probing, with and without
//! deadlines, each measured against its benchmark.

mod probing;
mod prophet;

pub use crate::optimize::ProbingInstance;
pub use probing::{run_probing, run_probing_with_deadlines, ProbingOptions, ProbingPlan, ProbingReport, ProbingRun};
pub use prophet::{
    brute_force_prophet_opt, evaluate_prophet, prophet_thresholds, run_prophet, OrderPolicy, ProphetInstance,
    ProphetOptions, ProphetPlan, ProphetReport, ProphetRun, Threshold, PROPHET_SCENARIO_LIMIT,
};

use serde::Serialize;

use crate::harness::{run_trials, MeanAccumulator, MeanEstimate};

/// Mean online value over a benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioEstimate {
    pub mean: MeanEstimate,
    pub benchmark: f64,
    pub ratio: f64,
    pub ci_halfwidth: f64,
}

impl RatioEstimate {
    /// `mean / benchmark`, with `0/0` read as 1.
    pub fn new(mean: MeanEstimate, benchmark: f64) -> Self {
        let (ratio, ci_halfwidth) = if benchmark == 0.0 {
            if mean.mean == 0.0 {
                (1.0, 0.0)
            } else {
                (f64::INFINITY, 0.0)
            }
        } else {
            (mean.mean / benchmark, mean.ci_halfwidth / benchmark)
        };
        RatioEstimate {
            mean,
            benchmark,
            ratio,
            ci_halfwidth,
        }
    }

    /// `ratio + multiplier·ci + slack ≥ bound`.
    pub fn passes(&self, bound: f64, slack: f64, multiplier: f64) -> bool {
        self.ratio + multiplier * self.ci_halfwidth + slack >= bound
    }
}

/// Averages `run(t)` over trials `0..trials` and divides by `benchmark`.
pub fn estimate_competitive_ratio<F>(run: F, benchmark: f64, trials: u64, workers: Option<usize>) -> RatioEstimate
where
    F: Fn(u64) -> f64 + Sync + Send,
{
    let acc = run_trials(
        trials,
        workers,
        MeanAccumulator::default,
        |acc, t| acc.push(run(t)),
        |a, b| a.merge(b),
    );
    RatioEstimate::new(acc.estimate(), benchmark)
}

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RatioEstimate;
use crate::base::{tags, ElementSet, FractionalPoint, SeedSpec};
use crate::error::{invalid, Error, Result};
use crate::harness::{with_workers, worst_order_value, MeanAccumulator, Scenario, SearchMode};
use crate::matroids::{max_weight_independent, Matroid, MatroidDescriptor};
use crate::optimize::{solve_prophet_relaxation, DiscreteDistribution, ProphetRelaxation};
use crate::schemes::{is_permutation, run_greedy_ocrs, Bound, ChainConfig, DynMatroid, PreparedScheme, SchemeSpec};

/// Largest product of support sizes [`brute_force_prophet_opt`] enumerates.
pub const PROPHET_SCENARIO_LIMIT: u64 = 1_000_000;

/// A matroid and one independent value distribution per element.
#[derive(Clone)]
pub struct ProphetInstance {
    pub matroid: Arc<DynMatroid>,
    pub dists: Vec<DiscreteDistribution>,
}

impl std::fmt::Debug for ProphetInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProphetInstance")
            .field("n", &self.matroid.ground_size())
            .field("dists", &self.dists)
            .finish()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProphetFile {
    matroid: MatroidDescriptor,
    dists: Vec<DiscreteDistribution>,
}

impl ProphetInstance {
    pub fn new(matroid: Arc<DynMatroid>, dists: Vec<DiscreteDistribution>) -> Result<Self> {
        let n = matroid.ground_size();
        if dists.len() != n {
            return Err(invalid(format!(
                "dists: expected {n} distributions, got {}",
                dists.len()
            )));
        }
        if let Some(e) = dists.iter().position(|d| !d.is_nonnegative()) {
            return Err(invalid(format!("dists[{e}]: prophet values must be nonnegative")));
        }
        Ok(ProphetInstance { matroid, dists })
    }

    /// `{"matroid": …, "dists": [{"support": […], "probs": […]}, …]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let f: ProphetFile = serde_json::from_str(text).map_err(|e| invalid(format!("prophet instance: {e}")))?;
        Self::new(Arc::new(Matroid::from_descriptor(&f.matroid)?), f.dists)
    }

    pub fn ground_size(&self) -> usize {
        self.dists.len()
    }
}

/// Activation rule for one element: active when `z > q`, or when `z = q`
/// and an independent coin with bias `tie_prob` comes up heads.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Threshold {
    pub q: f64,
    pub tie_prob: f64,
}

impl Threshold {
    pub fn is_active(&self, z: f64, coin: f64) -> bool {
        z > self.q || (z == self.q && coin < self.tie_prob)
    }
}

/// `q_e = q_e(x_e)` and tie probability `(x_e - 1 + F_e(q_e)) / Pr[Z_e = q_e]`,
/// so that `Pr[e active] = x_e`.
pub fn prophet_thresholds(dists: &[DiscreteDistribution], x: &FractionalPoint) -> Result<Vec<Threshold>> {
    if x.len() != dists.len() {
        return Err(Error::GroundMismatch {
            expected: dists.len(),
            got: x.len(),
        });
    }
    Ok(dists
        .iter()
        .zip(x.values())
        .map(|(d, &xe)| {
            let q = d.threshold(xe);
            let atom = d.prob_of(q);
            let tie_prob = ((xe - 1.0 + d.cdf(q)) / atom).clamp(0.0, 1.0);
            Threshold { q, tie_prob }
        })
        .collect())
}

/// `E[max{Σ_{e∈S} Z_e : S ∈ F}]` by enumerating the product distribution.
pub fn brute_force_prophet_opt(instance: &ProphetInstance) -> Result<f64> {
    let sizes: Vec<usize> = instance.dists.iter().map(|d| d.support().len()).collect();
    let total = sizes
        .iter()
        .try_fold(1u64, |acc, &s| acc.checked_mul(s as u64))
        .filter(|&t| t <= PROPHET_SCENARIO_LIMIT)
        .ok_or(Error::TooLarge {
            what: "prophet scenario enumeration (product of support sizes)",
            limit: PROPHET_SCENARIO_LIMIT as usize,
            n: instance.ground_size(),
        })?;
    let n = instance.ground_size();
    let mut idx = vec![0usize; n];
    let mut expectation = 0.0;
    for _ in 0..total {
        let z: Vec<f64> = (0..n).map(|e| instance.dists[e].support()[idx[e]]).collect();
        let prob: f64 = (0..n).map(|e| instance.dists[e].probs()[idx[e]]).product();
        let best = max_weight_independent(instance.matroid.as_ref(), &z);
        expectation += prob * best.iter().map(|e| z[e]).sum::<f64>();
        for e in 0..n {
            idx[e] += 1;
            if idx[e] < sizes[e] {
                break;
            }
            idx[e] = 0;
        }
    }
    Ok(expectation)
}

/// A solved relaxation with thresholds and the chain scheme prepared at
/// `b·x`. Elements are offered to the scheme after downsampling at rate
/// `b`, which turns the `(b, 1-b)`-selectable scheme into a
/// `b(1-b)`-selectable one.
#[derive(Clone, Debug)]
pub struct ProphetPlan {
    pub instance: ProphetInstance,
    pub relaxation: ProphetRelaxation,
    pub thresholds: Vec<Threshold>,
    pub b: f64,
    pub scheme: PreparedScheme,
    pub bound: Bound,
}

impl ProphetPlan {
    pub fn new(instance: ProphetInstance, b: f64, eps: f64, seed: &SeedSpec) -> Result<Self> {
        if !(b > 0.0 && b <= 1.0) {
            return Err(invalid(format!("b = {b} must lie in (0,1]")));
        }
        let relaxation = solve_prophet_relaxation(instance.matroid.as_ref(), &instance.dists)?;
        let thresholds = prophet_thresholds(&instance.dists, &relaxation.x)?;
        let spec = SchemeSpec::matroid_with(instance.matroid.clone(), ChainConfig::new(b).with_eps(eps));
        let scheme = spec.prepare(&relaxation.x.scale(b)?, seed)?;
        let c = scheme.bound();
        let bound = Bound {
            value: b * c.value,
            slack: b * c.slack,
            expression: format!("b*({})", c.expression),
        };
        Ok(ProphetPlan {
            instance,
            relaxation,
            thresholds,
            b,
            scheme,
            bound,
        })
    }

    /// Draws values, threshold coins and downsampling coins from `values`
    /// (three uniforms per element, always), and the family from `family`.
    pub fn scenario<V: Rng + ?Sized, F: Rng + ?Sized>(&self, values: &mut V, family: &mut F) -> Scenario {
        let n = self.instance.ground_size();
        let z: Vec<f64> = self.instance.dists.iter().map(|d| d.sample(values)).collect();
        let mut active = ElementSet::EMPTY;
        for e in 0..n {
            let coin: f64 = values.gen();
            if self.thresholds[e].is_active(z[e], coin) {
                active.insert(e);
            }
        }
        let mut kept = ElementSet::EMPTY;
        for e in 0..n {
            let coin: f64 = values.gen();
            if active.contains(e) && coin < self.b {
                kept.insert(e);
            }
        }
        Scenario {
            active: kept,
            family: self.scheme.sample(family),
            values: z,
        }
    }

    fn trial_scenario(&self, seed: &SeedSpec, t: u64) -> Scenario {
        self.scenario(
            &mut seed.child(tags::VALUES).stream(t),
            &mut seed.child(tags::FAMILY).stream(t),
        )
    }
}

/// Outcome of one online run.
#[derive(Clone, Debug, PartialEq)]
pub struct ProphetRun {
    pub selected: ElementSet,
    pub value: f64,
    /// Elements offered to the scheme (active after downsampling).
    pub offered: ElementSet,
}

/// One run: draws values, marks active elements by threshold, downsamples,
/// and plays the greedy OCRS over `order`. Fails if the selected set is
/// dependent.
pub fn run_prophet<R: Rng + ?Sized>(plan: &ProphetPlan, order: &[usize], rng: &mut R) -> Result<ProphetRun> {
    if !is_permutation(order, plan.instance.ground_size()) {
        return Err(invalid("order: expected a permutation of the ground set"));
    }
    let mut family_rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng.gen());
    let s = plan.scenario(rng, &mut family_rng);
    let selected = run_greedy_ocrs(&s.family, order, s.active);
    if !plan.instance.matroid.is_independent(selected) {
        return Err(Error::FeasibilityViolated(format!(
            "selected set {selected} is dependent"
        )));
    }
    Ok(ProphetRun {
        selected,
        value: selected.iter().map(|e| s.values[e]).sum(),
        offered: s.active,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderPolicy {
    Fixed(Vec<usize>),
    /// Searches all orders for `n ≤ 8`, local search above.
    WorstFound,
}

#[derive(Clone, Debug)]
pub struct ProphetOptions {
    pub b: f64,
    pub eps: f64,
    pub trials: u64,
    pub seed: u64,
    pub workers: Option<usize>,
    pub order: OrderPolicy,
    pub ci_multiplier: f64,
}

impl ProphetOptions {
    pub fn new(trials: u64, seed: u64) -> Self {
        ProphetOptions {
            b: 0.5,
            eps: 0.05,
            trials,
            seed,
            workers: None,
            order: OrderPolicy::WorstFound,
            ci_multiplier: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProphetReport {
    pub n: usize,
    pub b: f64,
    pub trials: u64,
    pub seed: u64,
    pub relaxation_x: Vec<f64>,
    pub relaxation_objective: f64,
    pub thresholds: Vec<Threshold>,
    pub order: Vec<usize>,
    pub search_mode: Option<SearchMode>,
    pub orders_evaluated: usize,
    pub ratio: RatioEstimate,
    pub bound: Bound,
    pub ci_multiplier: f64,
    pub feasibility_violations: u64,
    pub pass: bool,
}

/// Runs the prophet pipeline over `trials` common scenarios under the chosen
/// order and compares the mean value with the exact `E[max]`. Also returns
/// the per-trial values.
pub fn evaluate_prophet(instance: &ProphetInstance, opts: &ProphetOptions) -> Result<(ProphetReport, Vec<f64>)> {
    if opts.trials == 0 {
        return Err(invalid("trials must be positive"));
    }
    let n = instance.ground_size();
    let seed = SeedSpec::new(opts.seed);
    let benchmark = brute_force_prophet_opt(instance)?;
    let plan = ProphetPlan::new(instance.clone(), opts.b, opts.eps, &seed)?;
    let scenarios: Vec<Scenario> = with_workers(opts.workers, || {
        (0..opts.trials)
            .into_par_iter()
            .map(|t| plan.trial_scenario(&seed, t))
            .collect()
    });
    let (order, mode, evaluated) = match &opts.order {
        OrderPolicy::Fixed(o) => {
            if !is_permutation(o, n) {
                return Err(invalid("order: expected a permutation of the ground set"));
            }
            (o.clone(), None, 1)
        }
        OrderPolicy::WorstFound => {
            let r = worst_order_value(n, &scenarios, opts.workers);
            if r.containment_violations > 0 {
                return Err(Error::Internal(format!(
                    "{} runs missed a selectable element",
                    r.containment_violations
                )));
            }
            (r.worst_order, Some(r.mode), r.orders_evaluated)
        }
    };
    let mut acc = MeanAccumulator::default();
    let mut violations = 0;
    let values: Vec<f64> = scenarios
        .iter()
        .map(|s| {
            let selected = run_greedy_ocrs(&s.family, &order, s.active);
            if !instance.matroid.is_independent(selected) {
                violations += 1;
            }
            let v = selected.iter().map(|e| s.values[e]).sum();
            acc.push(v);
            v
        })
        .collect();
    let ratio = RatioEstimate::new(acc.estimate(), benchmark);
    let pass = violations == 0 && ratio.passes(plan.bound.value, plan.bound.slack, opts.ci_multiplier);
    log::info!(
        "prophet: n = {n}, b = {}, order {order:?}, E[max] = {benchmark:.6}, mean {:.6}, ratio {:.4} vs bound {} = {:.4}",
        opts.b,
        ratio.mean.mean,
        ratio.ratio,
        plan.bound.expression,
        plan.bound.value
    );
    Ok((
        ProphetReport {
            n,
            b: opts.b,
            trials: opts.trials,
            seed: opts.seed,
            relaxation_x: plan.relaxation.x.values().to_vec(),
            relaxation_objective: plan.relaxation.objective,
            thresholds: plan.thresholds.clone(),
            order,
            search_mode: mode,
            orders_evaluated: evaluated,
            ratio,
            bound: plan.bound.clone(),
            ci_multiplier: opts.ci_multiplier,
            feasibility_violations: violations,
            pass,
        },
        values,
    ))
}

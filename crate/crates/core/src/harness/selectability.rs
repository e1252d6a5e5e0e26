use serde::Serialize;

use super::{binomial_halfwidth, run_trials};
use crate::base::{sample_active_set, tags, ElementSet, FractionalPoint, SeedSpec};
use crate::error::{invalid, Error, Result};
use crate::schemes::{Bound, FeasibleFamily, PreparedScheme, SchemeSpec};

/// Largest ground set [`brute_force_selectability`] enumerates.
pub const BRUTE_FORCE_LIMIT: usize = 6;

#[derive(Clone, Debug)]
pub struct SelectabilityOptions {
    pub trials: u64,
    pub seed: u64,
    pub workers: Option<usize>,
    /// Half-widths are multiplied by this before the pass test.
    pub ci_multiplier: f64,
}

impl SelectabilityOptions {
    pub fn new(trials: u64, seed: u64) -> Self {
        SelectabilityOptions {
            trials,
            seed,
            workers: None,
            ci_multiplier: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ElementReport {
    pub element: usize,
    pub estimate: f64,
    pub ci_halfwidth: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectabilityReport {
    pub scheme: String,
    pub b: f64,
    pub trials: u64,
    pub seed: u64,
    pub bound: Bound,
    pub ci_multiplier: f64,
    pub elements: Vec<ElementReport>,
    pub pass: bool,
}

impl SelectabilityReport {
    pub fn estimates(&self) -> Vec<f64> {
        self.elements.iter().map(|e| e.estimate).collect()
    }

    pub fn min_estimate(&self) -> f64 {
        self.elements.iter().map(|e| e.estimate).fold(f64::INFINITY, f64::min)
    }
}

/// Prepares `spec` for `x` and estimates every element's selectability.
pub fn estimate_selectability(
    spec: &SchemeSpec,
    x: &FractionalPoint,
    opts: &SelectabilityOptions,
) -> Result<SelectabilityReport> {
    let prepared = spec.prepare(x, &SeedSpec::new(opts.seed))?;
    estimate_prepared(&prepared, &spec.name(), spec.b(), x, opts)
}

/// Per trial `t`: draws `R(x)` from `seed.child(ACTIVE).stream(t)` and the
/// family from `seed.child(FAMILY).stream(t)`, then records which elements
/// are selectable.
pub fn estimate_prepared(
    prepared: &PreparedScheme,
    scheme: &str,
    b: f64,
    x: &FractionalPoint,
    opts: &SelectabilityOptions,
) -> Result<SelectabilityReport> {
    let n = prepared.ground_size();
    if x.len() != n {
        return Err(Error::GroundMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if opts.trials < 1000 {
        return Err(invalid(format!(
            "trials = {} is below the minimum of 1000",
            opts.trials
        )));
    }
    let seed = SeedSpec::new(opts.seed);
    let (active_seed, family_seed) = (seed.child(tags::ACTIVE), seed.child(tags::FAMILY));
    let counts = run_trials(
        opts.trials,
        opts.workers,
        || vec![0u64; n],
        |acc, t| {
            let active = sample_active_set(x, &mut active_seed.stream(t));
            let family = prepared.sample(&mut family_seed.stream(t));
            for e in 0..n {
                if family.selectable(active, e) {
                    acc[e] += 1;
                }
            }
        },
        |a, b| a.iter_mut().zip(b).for_each(|(u, v)| *u += v),
    );
    let bound = prepared.bound();
    let elements: Vec<ElementReport> = counts
        .iter()
        .enumerate()
        .map(|(e, &c)| {
            let estimate = c as f64 / opts.trials as f64;
            let ci_halfwidth = binomial_halfwidth(estimate, opts.trials);
            ElementReport {
                element: e,
                estimate,
                ci_halfwidth,
                bound: bound.value,
                pass: estimate + opts.ci_multiplier * ci_halfwidth + bound.slack >= bound.value,
            }
        })
        .collect();
    let pass = elements.iter().all(|e| e.pass);
    log::info!(
        "{scheme}: b = {b}, bound {} = {:.6} (slack {}), min estimate {:.6}, pass = {pass}",
        bound.expression,
        bound.value,
        bound.slack,
        elements.iter().map(|e| e.estimate).fold(f64::INFINITY, f64::min)
    );
    Ok(SelectabilityReport {
        scheme: scheme.to_string(),
        b,
        trials: opts.trials,
        seed: opts.seed,
        bound,
        ci_multiplier: opts.ci_multiplier,
        elements,
        pass,
    })
}

/// The definition itself: every member `I ⊆ active` of the family stays a
/// member after adding `e`. Uses only membership queries.
pub fn quantifier_selectable(family: &FeasibleFamily, active: ElementSet, e: usize) -> bool {
    active
        .without(e)
        .subsets()
        .all(|i| !family.contains(i) || family.contains(i.with(e)))
}

/// Exact selectability of every element, summing over all outcomes of `R(x)`
/// and of the family, and deciding selectability by the quantifier
/// definition rather than the scheme's fast test.
pub fn brute_force_selectability(prepared: &PreparedScheme, x: &FractionalPoint) -> Result<Vec<f64>> {
    let n = prepared.ground_size();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            what: "brute-force selectability",
            limit: BRUTE_FORCE_LIMIT,
            n,
        });
    }
    if x.len() != n {
        return Err(Error::GroundMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let outcomes = prepared.enumerate()?;
    let mut out = vec![0.0; n];
    for active in ElementSet::full(n).subsets() {
        let pa: f64 = (0..n)
            .map(|e| if active.contains(e) { x.get(e) } else { 1.0 - x.get(e) })
            .product();
        if pa == 0.0 {
            continue;
        }
        for (pf, family) in &outcomes {
            for (e, slot) in out.iter_mut().enumerate() {
                if quantifier_selectable(family, active, e) {
                    *slot += pa * pf;
                }
            }
        }
    }
    Ok(out)
}

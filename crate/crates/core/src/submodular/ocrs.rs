use rand::Rng;
use serde::Serialize;

use super::EXACT_MULTILINEAR_LIMIT;
use super::{
    continuous_greedy, multilinear_f, FunctionSummary, GreedyOptions, GreedyRegion, Multilinear, SubmodularFunction,
};
use crate::applications::ProbingPlan;
use crate::base::{sample_active_set, tags, ElementSet, FractionalPoint, SeedSpec};
use crate::error::{invalid, Error, Result};
use crate::harness::{run_trials, MeanAccumulator, MeanEstimate};
use crate::schemes::{is_permutation, run_greedy_ocrs, selectable_set, Bound, Constraint, FeasibleFamily, SchemeSpec};

/// Samples used for `F` when the ground set is too large for the exact sum.
const DEFAULT_MULTILINEAR_SAMPLES: u64 = 200_000;

/// `π̄(A)`: the active elements whose every feasible companion set within
/// `A` stays feasible with them added.
pub fn characteristic_crs(family: &FeasibleFamily, active: ElementSet) -> ElementSet {
    selectable_set(family, active)
}

#[derive(Clone, Debug)]
pub struct SubmodularOptions {
    pub trials: u64,
    pub seed: u64,
    pub workers: Option<usize>,
    /// Arrival order; the identity when absent.
    pub order: Option<Vec<usize>>,
    pub ci_multiplier: f64,
    /// How `F` is evaluated; exact for `n ≤ 14` when absent.
    pub multilinear: Option<Multilinear>,
    /// Additive slack, as a fraction of the target.
    pub slack: f64,
    /// Chain construction tolerance for the probing schemes.
    pub eps: f64,
    pub greedy: GreedyOptions,
}

impl SubmodularOptions {
    pub fn new(trials: u64, seed: u64) -> Self {
        SubmodularOptions {
            trials,
            seed,
            workers: None,
            order: None,
            ci_multiplier: 1.0,
            multilinear: None,
            slack: 0.0,
            eps: 0.05,
            greedy: GreedyOptions {
                seed,
                ..GreedyOptions::default()
            },
        }
    }

    fn evaluator(&self, n: usize) -> Multilinear {
        self.multilinear.unwrap_or(if n <= EXACT_MULTILINEAR_LIMIT {
            Multilinear::Exact
        } else {
            Multilinear::Sampled {
                samples: DEFAULT_MULTILINEAR_SAMPLES,
                seed: self.seed,
            }
        })
    }

    fn order(&self, n: usize) -> Result<Vec<usize>> {
        let order = self.order.clone().unwrap_or_else(|| (0..n).collect());
        if !is_permutation(&order, n) {
            return Err(invalid("order: expected a permutation of the ground set"));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be positive"));
        }
        Ok(order)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubmodularReport {
    pub function: FunctionSummary,
    pub scheme: String,
    pub n: usize,
    pub b: f64,
    pub trials: u64,
    pub seed: u64,
    pub order: Vec<usize>,
    pub x: Vec<f64>,
    /// Whether the output was subsampled at rate ½ before evaluation.
    pub subsampled: bool,
    pub multilinear: MeanEstimate,
    pub multilinear_exact: bool,
    /// The scheme's selectability constant `c`.
    pub selectability: Bound,
    /// 1, or ¼ for the subsampled variant.
    pub factor: f64,
    /// `factor·c·F(x)`.
    pub target: f64,
    pub mean: MeanEstimate,
    pub ci_multiplier: f64,
    /// Trials where the characteristic CRS was not inside the greedy output.
    pub containment_violations: u64,
    pub pass: bool,
}

/// `E[f(S)]` for the greedy OCRS output `S` against `c·F(x)`. Non-monotone
/// functions are routed to [`half_subsample_value`].
pub fn ocrs_submodular_value(
    f: &SubmodularFunction,
    scheme: &SchemeSpec,
    x: &FractionalPoint,
    opts: &SubmodularOptions,
) -> Result<(SubmodularReport, Vec<f64>)> {
    evaluate(f, scheme, x, opts, !f.is_monotone())
}

/// `E[f(R(½·χ_S))]` against `(c/4)·F(x)`.
pub fn half_subsample_value(
    f: &SubmodularFunction,
    scheme: &SchemeSpec,
    x: &FractionalPoint,
    opts: &SubmodularOptions,
) -> Result<(SubmodularReport, Vec<f64>)> {
    evaluate(f, scheme, x, opts, true)
}

fn half<R: Rng + ?Sized>(s: ElementSet, rng: &mut R) -> ElementSet {
    s.iter().filter(|_| rng.gen_bool(0.5)).collect()
}

fn evaluate(
    f: &SubmodularFunction,
    scheme: &SchemeSpec,
    x: &FractionalPoint,
    opts: &SubmodularOptions,
    subsampled: bool,
) -> Result<(SubmodularReport, Vec<f64>)> {
    let n = f.ground_size();
    if scheme.ground_size() != n || x.len() != n {
        return Err(Error::GroundMismatch {
            expected: n,
            got: if x.len() != n { x.len() } else { scheme.ground_size() },
        });
    }
    let order = opts.order(n)?;
    let seed = SeedSpec::new(opts.seed);
    let prepared = scheme.prepare(x, &seed.child(tags::CONSTRUCTION))?;
    let (active_seed, family_seed, sub_seed) = (
        seed.child(tags::ACTIVE),
        seed.child(tags::FAMILY),
        seed.child(tags::SUBSAMPLE),
    );
    let (acc, contained, values) = run_trials(
        opts.trials,
        opts.workers,
        || (MeanAccumulator::default(), 0u64, Vec::new()),
        |acc, t| {
            let active = sample_active_set(x, &mut active_seed.stream(t));
            let family = prepared.sample(&mut family_seed.stream(t));
            let mut s = run_greedy_ocrs(&family, &order, active);
            if !characteristic_crs(&family, active).is_subset(s) {
                acc.1 += 1;
            }
            if subsampled {
                s = half(s, &mut sub_seed.stream(t));
            }
            let v = f.value(s);
            acc.0.push(v);
            acc.2.push(v);
        },
        |a, b| {
            a.0.merge(b.0);
            a.1 += b.1;
            a.2.extend(b.2);
        },
    );
    let eval = opts.evaluator(n);
    let big_f = multilinear_f(f, x, eval)?;
    let c = prepared.bound();
    let factor = if subsampled { 0.25 } else { 1.0 };
    let target = factor * c.value * big_f.mean;
    let mean = acc.estimate();
    let tolerance = opts.ci_multiplier * (mean.ci_halfwidth + factor * c.value * big_f.ci_halfwidth)
        + factor * c.slack * big_f.mean
        + opts.slack * target;
    let pass = contained == 0 && mean.mean + tolerance >= target;
    log::info!(
        "submodular ({}{}): mean {:.6} vs {}·c·F = {:.6}",
        f.kind(),
        if subsampled { ", subsampled" } else { "" },
        mean.mean,
        factor,
        target
    );
    Ok((
        SubmodularReport {
            function: f.into(),
            scheme: scheme.name(),
            n,
            b: scheme.b(),
            trials: opts.trials,
            seed: opts.seed,
            order,
            x: x.values().to_vec(),
            subsampled,
            multilinear: big_f,
            multilinear_exact: eval == Multilinear::Exact,
            selectability: c,
            factor,
            target,
            mean,
            ci_multiplier: opts.ci_multiplier,
            containment_violations: contained,
            pass,
        },
        values,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubmodularProbingReport {
    pub function: FunctionSummary,
    pub n: usize,
    pub b: f64,
    pub trials: u64,
    pub seed: u64,
    pub order: Vec<usize>,
    pub p: Vec<f64>,
    /// Continuous greedy output, stopped at time `b`.
    pub x_tilde: Vec<f64>,
    /// `F(p ∘ x̃)`.
    pub multilinear: MeanEstimate,
    pub multilinear_exact: bool,
    /// `c_in·c_out`.
    pub bound: Bound,
    pub target: f64,
    pub mean: MeanEstimate,
    pub ci_multiplier: f64,
    pub feasibility_violations: u64,
    pub pass: bool,
}

/// Continuous greedy over the probing region to time `b`, then the probing
/// algorithm at `x̃`; compares `E[f(S)]` with `c_in·c_out·F(p ∘ x̃)`.
pub fn run_submodular_probing(
    f: &SubmodularFunction,
    p: &[f64],
    inner: &Constraint,
    outer: &Constraint,
    b: f64,
    opts: &SubmodularOptions,
) -> Result<(SubmodularProbingReport, Vec<f64>)> {
    if !f.is_monotone() {
        return Err(invalid("submodular probing needs a monotone function"));
    }
    let n = f.ground_size();
    for (what, got) in [
        ("p", p.len()),
        ("inner", inner.ground_size()),
        ("outer", outer.ground_size()),
    ] {
        if got != n {
            return Err(invalid(format!("{what}: expected {n} elements, got {got}")));
        }
    }
    let order = opts.order(n)?;
    let region = GreedyRegion::Probing {
        p: p.to_vec(),
        inner: inner.clone(),
        outer: outer.clone(),
    };
    let x_tilde = continuous_greedy(f, &region, b, &opts.greedy)?;
    let seed = SeedSpec::new(opts.seed);
    let plan = ProbingPlan::new(p, inner, outer, None, x_tilde.clone(), b, opts.eps, &seed)?;
    let probe = seed.child(tags::PROBE);
    let (acc, violations, values) = run_trials(
        opts.trials,
        opts.workers,
        || (MeanAccumulator::default(), 0u64, Vec::new()),
        |acc, t| {
            let r = plan.run(&order, &mut probe.stream(t));
            let v = f.value(r.selected);
            acc.0.push(v);
            acc.1 += r.feasibility_violations;
            acc.2.push(v);
        },
        |a, b| {
            a.0.merge(b.0);
            a.1 += b.1;
            a.2.extend(b.2);
        },
    );
    let eval = opts.evaluator(n);
    let big_f = multilinear_f(f, &x_tilde.hadamard(p)?, eval)?;
    let target = plan.bound.value * big_f.mean;
    let mean = acc.estimate();
    let tolerance = opts.ci_multiplier * (mean.ci_halfwidth + plan.bound.value * big_f.ci_halfwidth)
        + plan.bound.slack * big_f.mean
        + opts.slack * target;
    let pass = violations == 0 && mean.mean + tolerance >= target;
    log::info!(
        "submodular probing: mean {:.6} vs c_in·c_out·F(p∘x̃) = {:.6}",
        mean.mean,
        target
    );
    Ok((
        SubmodularProbingReport {
            function: f.into(),
            n,
            b,
            trials: opts.trials,
            seed: opts.seed,
            order,
            p: p.to_vec(),
            x_tilde: x_tilde.values().to_vec(),
            multilinear: big_f,
            multilinear_exact: eval == Multilinear::Exact,
            bound: plan.bound,
            target,
            mean,
            ci_multiplier: opts.ci_multiplier,
            feasibility_violations: violations,
            pass,
        },
        values,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroids::Matroid;

    fn uniform_family(n: usize, k: usize) -> FeasibleFamily {
        let spec = SchemeSpec::matroid(Matroid::uniform(n, k).unwrap(), 1.0);
        let x = FractionalPoint::new(vec![k as f64 / n as f64; n]).unwrap();
        spec.prepare(&x, &SeedSpec::new(0))
            .unwrap()
            .sample(&mut SeedSpec::new(0).stream(0))
    }

    #[test]
    fn characteristic_examples() {
        let fam = uniform_family(2, 1);
        assert_eq!(characteristic_crs(&fam, ElementSet::EMPTY), ElementSet::EMPTY);
        assert_eq!(
            characteristic_crs(&fam, ElementSet::singleton(0)),
            ElementSet::singleton(0)
        );
        assert_eq!(characteristic_crs(&fam, ElementSet::full(2)), ElementSet::EMPTY);
    }

    #[test]
    fn zero_point_gives_empty_value() {
        let f = SubmodularFunction::coverage(vec![1.0, 1.0], vec![vec![0], vec![1]]).unwrap();
        let spec = SchemeSpec::matroid(Matroid::uniform(2, 1).unwrap(), 0.5);
        let (r, values) =
            ocrs_submodular_value(&f, &spec, &FractionalPoint::zeros(2), &SubmodularOptions::new(1000, 1)).unwrap();
        assert!(values.iter().all(|&v| v == 0.0));
        assert!(r.pass);
    }

    #[test]
    fn modular_half_subsample_is_half_of_selection() {
        // uniform(2,2) at b = 0.5 never blocks, so Pr[e ∈ S] = x_e
        let f = SubmodularFunction::modular(vec![2.0, 4.0]).unwrap();
        let spec = SchemeSpec::matroid(Matroid::uniform(2, 2).unwrap(), 0.5);
        let x = FractionalPoint::new(vec![0.5, 0.25]).unwrap();
        let mut opts = SubmodularOptions::new(100_000, 5);
        opts.ci_multiplier = 3.0;
        let (r, _) = half_subsample_value(&f, &spec, &x, &opts).unwrap();
        assert!((r.mean.mean - 0.5 * (0.5 * 2.0 + 0.25 * 4.0)).abs() <= 3.0 * r.mean.ci_halfwidth);
        assert!(r.pass);
    }

    #[test]
    fn probing_with_zero_probabilities() {
        let f = SubmodularFunction::coverage(vec![1.0, 1.0], vec![vec![0], vec![1]]).unwrap();
        let c = Constraint::matroid(Matroid::uniform(2, 1).unwrap());
        let mut opts = SubmodularOptions::new(2000, 2);
        opts.greedy.steps_per_unit = 10;
        let (r, values) = run_submodular_probing(&f, &[0.0, 0.0], &c, &c, 0.5, &opts).unwrap();
        assert!(values.iter().all(|&v| v == 0.0));
        assert_eq!(r.multilinear.mean, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn probing_rejects_cut() {
        let f = SubmodularFunction::directed_cut(2, vec![(0, 1, 1.0)]).unwrap();
        let c = Constraint::matroid(Matroid::uniform(2, 1).unwrap());
        assert!(run_submodular_probing(&f, &[0.5, 0.5], &c, &c, 0.5, &SubmodularOptions::new(10, 0)).is_err());
    }
}

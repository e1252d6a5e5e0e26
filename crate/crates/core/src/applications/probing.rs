use rand::Rng;
use serde::Serialize;

use super::RatioEstimate;
use crate::base::{sample_active_set, tags, ElementSet, FractionalPoint, SeedSpec};
use crate::error::{invalid, Result};
use crate::harness::{run_trials, MeanAccumulator};
use crate::optimize::{adaptive_optimum, rational_to_f64, solve_probing_lp, ProbingInstance, ADAPTIVE_LIMIT};
use crate::schemes::{is_permutation, Bound, Constraint, PreparedScheme};

/// Schemes prepared for one probing point: the outer scheme on `point`, the
/// inner scheme on `p ∘ point`.
#[derive(Clone, Debug)]
pub struct ProbingPlan {
    pub p: FractionalPoint,
    pub point: FractionalPoint,
    pub inner_family: Constraint,
    pub outer_family: Constraint,
    pub deadlines: Option<Vec<usize>>,
    pub inner: PreparedScheme,
    pub outer: PreparedScheme,
    /// `c_in·c_out`.
    pub bound: Bound,
}

impl ProbingPlan {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        p: &[f64],
        inner: &Constraint,
        outer: &Constraint,
        deadlines: Option<Vec<usize>>,
        point: FractionalPoint,
        b: f64,
        eps: f64,
        seed: &SeedSpec,
    ) -> Result<Self> {
        let p = FractionalPoint::new(p.to_vec())?;
        let inner_point = point.hadamard(p.values())?;
        let inner_scheme = inner
            .scheme(b, eps)?
            .prepare(&inner_point, &seed.child(tags::CONSTRUCTION).child(1))?;
        let outer_scheme = outer
            .scheme(b, eps)?
            .prepare(&point, &seed.child(tags::CONSTRUCTION).child(2))?;
        let (ci, co) = (inner_scheme.bound(), outer_scheme.bound());
        let lower = (ci.value - ci.slack).max(0.0) * (co.value - co.slack).max(0.0);
        let value = ci.value * co.value;
        Ok(ProbingPlan {
            p,
            point,
            inner_family: inner.clone(),
            outer_family: outer.clone(),
            deadlines,
            inner: inner_scheme,
            outer: outer_scheme,
            bound: Bound {
                value,
                slack: value - lower,
                expression: format!("({})*({})", ci.expression, co.expression),
            },
        })
    }

    /// One run of the probing algorithm: `A_out ~ R(point)`, fresh families,
    /// then every element in `order` is probed iff it is in `A_out` and both
    /// `S + e` and `Q + e` stay in the sampled families.
    pub fn run<R: Rng + ?Sized>(&self, order: &[usize], rng: &mut R) -> ProbingRun {
        let a_out = sample_active_set(&self.point, rng);
        let active = sample_active_set(&self.p, rng);
        let inner = self.inner.sample(rng);
        let outer = self.outer.sample(rng);
        let (mut probed, mut selected) = (ElementSet::EMPTY, ElementSet::EMPTY);
        let mut deadline_violations = 0;
        for &e in order {
            if a_out.contains(e) && inner.contains(selected.with(e)) && outer.contains(probed.with(e)) {
                probed.insert(e);
                if let Some(d) = &self.deadlines {
                    if probed.len() > d[e] {
                        deadline_violations += 1;
                    }
                }
                if active.contains(e) {
                    selected.insert(e);
                }
            }
        }
        let feasible =
            self.outer_family.contains(probed) && self.inner_family.contains(selected) && selected == probed & active;
        ProbingRun {
            probed,
            selected,
            active,
            feasibility_violations: u64::from(!feasible),
            deadline_violations,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbingRun {
    pub probed: ElementSet,
    pub selected: ElementSet,
    pub active: ElementSet,
    /// 1 if `Q ∉ F_out`, `S ∉ F_in` or `S ≠ Q ∩ active`.
    pub feasibility_violations: u64,
    /// Probes made after the element's deadline position.
    pub deadline_violations: u64,
}

#[derive(Clone, Debug)]
pub struct ProbingOptions {
    pub eps: f64,
    pub trials: u64,
    pub seed: u64,
    pub workers: Option<usize>,
    /// Probe order; the identity (or deadline order) when absent.
    pub order: Option<Vec<usize>>,
    pub ci_multiplier: f64,
}

impl ProbingOptions {
    pub fn new(trials: u64, seed: u64) -> Self {
        ProbingOptions {
            eps: 0.05,
            trials,
            seed,
            workers: None,
            order: None,
            ci_multiplier: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbingReport {
    pub n: usize,
    pub b: f64,
    pub trials: u64,
    pub seed: u64,
    pub order: Vec<usize>,
    pub lp_x: Vec<f64>,
    pub lp_value: f64,
    pub lp_value_exact: String,
    /// Best adaptive strategy, for `n ≤ 4`.
    pub adaptive_optimum: Option<String>,
    pub lp_dominates_adaptive: Option<bool>,
    pub ratio: RatioEstimate,
    pub bound: Bound,
    pub ci_multiplier: f64,
    pub feasibility_violations: u64,
    pub deadline_violations: u64,
    pub pass: bool,
}

/// Solves the probing LP, runs the algorithm at `b·x*` in the given order,
/// and compares `E[w(S)]` with the LP value. Also returns the per-trial
/// weights.
pub fn run_probing(instance: &ProbingInstance, opts: &ProbingOptions) -> Result<(ProbingReport, Vec<f64>)> {
    if instance.deadlines.is_some() {
        return Err(invalid("instance has deadlines; use run_probing_with_deadlines"));
    }
    let order = opts
        .order
        .clone()
        .unwrap_or_else(|| (0..instance.ground_size()).collect());
    experiment(instance, &order, opts)
}

/// As [`run_probing`] with the outer constraint intersected with the
/// deadline laminar matroid and probes made in ascending deadline order.
pub fn run_probing_with_deadlines(
    instance: &ProbingInstance,
    opts: &ProbingOptions,
) -> Result<(ProbingReport, Vec<f64>)> {
    if instance.deadlines.is_none() {
        return Err(invalid("deadlines: missing"));
    }
    if opts.order.is_some() {
        return Err(invalid("order: probes follow the deadline order"));
    }
    experiment(instance, &instance.deadline_order(), opts)
}

fn experiment(instance: &ProbingInstance, order: &[usize], opts: &ProbingOptions) -> Result<(ProbingReport, Vec<f64>)> {
    let n = instance.ground_size();
    if !is_permutation(order, n) {
        return Err(invalid("order: expected a permutation of the ground set"));
    }
    if opts.trials == 0 {
        return Err(invalid("trials must be positive"));
    }
    let seed = SeedSpec::new(opts.seed);
    let lp = solve_probing_lp(instance)?;
    let b = instance.b;
    let plan = ProbingPlan::new(
        &instance.p,
        &instance.inner,
        &instance.effective_outer()?,
        instance.deadlines.clone(),
        lp.x.scale(b)?,
        b,
        opts.eps,
        &seed,
    )?;
    let (probe_seed, w) = (seed.child(tags::PROBE), &instance.w);
    let (acc, violations, late, values) = run_trials(
        opts.trials,
        opts.workers,
        || (MeanAccumulator::default(), 0u64, 0u64, Vec::new()),
        |acc, t| {
            let r = plan.run(order, &mut probe_seed.stream(t));
            let v: f64 = r.selected.iter().map(|e| w[e]).sum();
            acc.0.push(v);
            acc.1 += r.feasibility_violations;
            acc.2 += r.deadline_violations;
            acc.3.push(v);
        },
        |a, b| {
            a.0.merge(b.0);
            a.1 += b.1;
            a.2 += b.2;
            a.3.extend(b.3);
        },
    );
    let adaptive = if n <= ADAPTIVE_LIMIT {
        Some(adaptive_optimum(instance)?)
    } else {
        None
    };
    let bound = Bound {
        value: b * plan.bound.value,
        slack: b * plan.bound.slack,
        expression: format!("b*{}", plan.bound.expression),
    };
    let ratio = RatioEstimate::new(acc.estimate(), lp.value);
    let pass = violations == 0 && late == 0 && ratio.passes(bound.value, bound.slack, opts.ci_multiplier);
    log::info!(
        "probing: n = {n}, b = {b}, LP {:.6}, mean {:.6}, ratio {:.4} vs bound {} = {:.4}",
        lp.value,
        ratio.mean.mean,
        ratio.ratio,
        bound.expression,
        bound.value
    );
    if let Some(a) = &adaptive {
        log::debug!("adaptive optimum {} ≈ {:.6}", a, rational_to_f64(a));
    }
    Ok((
        ProbingReport {
            n,
            b,
            trials: opts.trials,
            seed: opts.seed,
            order: order.to_vec(),
            lp_x: lp.x.values().to_vec(),
            lp_value: lp.value,
            lp_value_exact: lp.exact_value.to_string(),
            lp_dominates_adaptive: adaptive.as_ref().map(|a| lp.exact_value >= *a),
            adaptive_optimum: adaptive.map(|a| a.to_string()),
            ratio,
            bound,
            ci_multiplier: opts.ci_multiplier,
            feasibility_violations: violations,
            deadline_violations: late,
            pass,
        },
        values,
    ))
}

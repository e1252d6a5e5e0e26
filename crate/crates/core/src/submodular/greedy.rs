use std::sync::Arc;

use super::multilinear::{sampled_gradient, ValueTable};
use super::{SubmodularFunction, EXACT_MULTILINEAR_LIMIT};
use crate::base::{tags, FractionalPoint, SeedSpec};
use crate::error::{invalid, Error, Result};
use crate::matroids::{in_scaled_polytope_with, max_weight_independent, RankTable};
use crate::optimize::{rational_from_f64, rational_to_f64, ProbingRegion};
use crate::schemes::{Constraint, DynMatroid};

/// Where the ascent moves.
#[derive(Clone)]
pub enum GreedyRegion {
    /// The matroid polytope; directions are max-weight bases.
    Matroid(Arc<DynMatroid>),
    /// `{x : p ∘ x ∈ P_in, x ∈ P_out}`; directions are LP vertices.
    Probing {
        p: Vec<f64>,
        inner: Constraint,
        outer: Constraint,
    },
}

#[derive(Clone, Debug)]
pub struct GreedyOptions {
    pub steps_per_unit: usize,
    /// Draws per gradient coordinate when `n` exceeds the exact limit.
    pub gradient_samples: u64,
    pub seed: u64,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        GreedyOptions {
            steps_per_unit: 100,
            gradient_samples: 500,
            seed: 0,
        }
    }
}

enum Direction {
    Matroid(Arc<DynMatroid>, RankTable),
    Probing {
        p: Vec<f64>,
        inner: Constraint,
        outer: Constraint,
        region: ProbingRegion,
    },
}

impl Direction {
    fn new(region: &GreedyRegion) -> Result<Self> {
        Ok(match region {
            GreedyRegion::Matroid(m) => Direction::Matroid(m.clone(), RankTable::build(m.as_ref())?),
            GreedyRegion::Probing { p, inner, outer } => Direction::Probing {
                p: p.clone(),
                inner: inner.clone(),
                outer: outer.clone(),
                region: ProbingRegion::new(p, inner, outer)?,
            },
        })
    }

    fn ground_size(&self) -> usize {
        match self {
            Direction::Matroid(m, _) => m.ground_size(),
            Direction::Probing { p, .. } => p.len(),
        }
    }

    /// The point the objective sees.
    fn image(&self, x: &FractionalPoint) -> Result<FractionalPoint> {
        match self {
            Direction::Matroid(..) => Ok(x.clone()),
            Direction::Probing { p, .. } => x.hadamard(p),
        }
    }

    /// Best vertex for the gradient of `F` at the image, as a vector in
    /// `[0,1]^n`. In the probing region the chain rule adds the `p` factor.
    fn vertex(&self, gains: &[f64]) -> Result<Vec<f64>> {
        match self {
            Direction::Matroid(m, _) => {
                let best = max_weight_independent(m.as_ref(), gains);
                Ok((0..gains.len())
                    .map(|e| if best.contains(e) { 1.0 } else { 0.0 })
                    .collect())
            }
            Direction::Probing { p, region, .. } => {
                let objective = gains
                    .iter()
                    .zip(p)
                    .map(|(g, pe)| rational_from_f64(g.max(0.0) * pe))
                    .collect::<Result<Vec<_>>>()?;
                let sol = region.maximize(objective)?;
                Ok(sol.exact_x.iter().map(rational_to_f64).collect())
            }
        }
    }

    fn contains(&self, x: &FractionalPoint, t: f64) -> Result<bool> {
        match self {
            Direction::Matroid(_, table) => Ok(in_scaled_polytope_with(table, x.values(), t)),
            Direction::Probing { p, inner, outer, .. } => {
                Ok(inner.in_scaled_polytope(&x.hadamard(p)?, t)? && outer.in_scaled_polytope(x, t)?)
            }
        }
    }
}

/// Continuous greedy stopped at time `b`: `⌈b·steps_per_unit⌉` steps of
/// size `δ = b / steps`, each moving along the best vertex for the gradient
/// of the multilinear extension. The gradient is exact for `n ≤ 14` and sampled otherwise.
/// Membership of the iterate in `t·P` is checked after every step.
pub fn continuous_greedy(
    f: &SubmodularFunction,
    region: &GreedyRegion,
    b: f64,
    opts: &GreedyOptions,
) -> Result<FractionalPoint> {
    if !f.is_monotone() {
        return Err(invalid("continuous greedy needs a monotone function"));
    }
    if !(0.0..=1.0).contains(&b) {
        return Err(invalid(format!("b = {b} must lie in [0, 1]")));
    }
    if opts.steps_per_unit == 0 {
        return Err(invalid("steps_per_unit must be positive"));
    }
    let dir = Direction::new(region)?;
    let n = f.ground_size();
    if dir.ground_size() != n {
        return Err(Error::GroundMismatch {
            expected: n,
            got: dir.ground_size(),
        });
    }
    let steps = (b * opts.steps_per_unit as f64).ceil() as usize;
    let mut x = vec![0.0; n];
    if steps == 0 {
        return FractionalPoint::new(x);
    }
    let delta = b / steps as f64;
    let table = if n <= EXACT_MULTILINEAR_LIMIT {
        Some(ValueTable::build(f)?)
    } else {
        None
    };
    let gradient = SeedSpec::new(opts.seed).child(tags::GRADIENT);
    for step in 0..steps {
        let image = dir.image(&FractionalPoint::new(x.clone())?)?;
        let gains = match &table {
            Some(t) => t.gradient(&image),
            None => sampled_gradient(f, &image, opts.gradient_samples, &mut gradient.stream(step as u64)),
        };
        let v = dir.vertex(&gains)?;
        for (xe, ve) in x.iter_mut().zip(&v) {
            *xe = (*xe + delta * ve).min(1.0);
        }
        let t = delta * (step + 1) as f64;
        let point = FractionalPoint::new(x.clone())?;
        if !dir.contains(&point, t)? {
            return Err(Error::OutsidePolytope(format!(
                "continuous greedy left {t}·P at step {}",
                step + 1
            )));
        }
    }
    log::debug!("continuous greedy: {steps} steps of {delta}, x = {x:?}");
    FractionalPoint::new(x)
}

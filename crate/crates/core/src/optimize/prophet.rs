use serde::Serialize;

use super::DiscreteDistribution;
use crate::base::{ElementSet, FractionalPoint};
use crate::error::{invalid, Error, Result};
use crate::matroids::{MatroidOracle, RankTable};

/// Largest ground set the relaxation solver accepts.
pub const PROPHET_LIMIT: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProphetRelaxation {
    pub x: FractionalPoint,
    /// `Σ_e g_e(x_e)`.
    pub objective: f64,
}

/// Maximizes `Σ_e g_e(x_e)` over the matroid polytope by slope-greedy: the
/// linear pieces of all tails are taken in order of decreasing slope, each
/// raised by its width or by the largest step `min_{S ∋ e} rank(S) - x(S)`
/// that keeps `x` in the polytope. This is the polymatroid greedy on the
/// pieces, which is exact for separable concave piecewise-linear objectives.
pub fn solve_prophet_relaxation<M: MatroidOracle + ?Sized>(
    m: &M,
    dists: &[DiscreteDistribution],
) -> Result<ProphetRelaxation> {
    let n = m.ground_size();
    if dists.len() != n {
        return Err(Error::GroundMismatch {
            expected: n,
            got: dists.len(),
        });
    }
    if n > PROPHET_LIMIT {
        return Err(Error::TooLarge {
            what: "prophet relaxation",
            limit: PROPHET_LIMIT,
            n,
        });
    }
    if let Some(e) = dists.iter().position(|d| !d.is_nonnegative()) {
        return Err(invalid(format!("dists[{e}]: prophet values must be nonnegative")));
    }
    let table = RankTable::build(m)?;
    let mut pieces: Vec<(f64, usize, f64)> = Vec::new();
    for (e, d) in dists.iter().enumerate() {
        let tail = d.tail_function();
        for (slope, width) in tail.slopes.iter().zip(tail.widths()) {
            if *slope > 0.0 {
                pieces.push((*slope, e, width));
            }
        }
    }
    // stable sort keeps each element's pieces in their own (descending) order
    pieces.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut x = vec![0.0; n];
    for &(_, e, width) in &pieces {
        let step = width.min(max_step(&table, &x, e));
        if step > 0.0 {
            x[e] = (x[e] + step).min(1.0);
        }
    }
    let objective = dists.iter().zip(&x).map(|(d, &v)| d.tail_value(v)).sum();
    Ok(ProphetRelaxation {
        x: FractionalPoint::clamped(x).with_validated_scale(1.0),
        objective,
    })
}

/// `min_{S ∋ e} rank(S) - x(S)`.
fn max_step(table: &RankTable, x: &[f64], e: usize) -> f64 {
    let n = x.len();
    let others = ElementSet::full(n).without(e);
    let mut sums = vec![0.0f64; 1 << n];
    for s in 1..sums.len() {
        let low = s.trailing_zeros() as usize;
        sums[s] = sums[s & (s - 1)] + x[low];
    }
    others
        .subsets()
        .map(|s| {
            let s = s.with(e);
            table.rank(s) as f64 - sums[s.index()]
        })
        .fold(f64::INFINITY, f64::min)
        .max(0.0)
}

//! Matroid oracles and derived operations: rank, span, contraction and
//! restriction views, greedy optimization and polytope membership.
//!
//! The independence test is the only primitive. Rank, span and bases are
//! derived with the matroid greedy, scanning candidates in ascending index
//! order so that every derived answer is deterministic.

mod kinds;
mod polytope;
mod view;

pub use kinds::{Matroid, MatroidDescriptor};
pub(crate) use polytope::in_scaled_polytope_with;
pub use polytope::{
    find_violation_sampled, in_scaled_matroid_polytope, max_polytope_scale, random_point_in_scaled_polytope, RankTable,
    EXHAUSTIVE_POLYTOPE_LIMIT,
};
pub use view::{contract_restrict, MatroidView};

use crate::base::ElementSet;
use crate::error::{Error, Result};

/// Largest ground set on which [`validate_axioms`] runs.
pub const EXHAUSTIVE_AXIOM_LIMIT: usize = 12;

/// Independence oracle over a ground set `{0, .., n-1}`.
pub trait MatroidOracle: Send + Sync {
    fn ground_size(&self) -> usize;

    fn is_independent(&self, set: ElementSet) -> bool;

    /// Greedy basis of `set`, scanning in ascending index order.
    fn basis_of(&self, set: ElementSet) -> ElementSet {
        extend_greedily(self, ElementSet::EMPTY, set)
    }

    fn rank(&self, set: ElementSet) -> usize {
        self.basis_of(set).len()
    }

    /// Whether `e ∈ span(set)`.
    fn spans(&self, set: ElementSet, e: usize) -> bool {
        if set.contains(e) {
            return true;
        }
        !self.is_independent(self.basis_of(set).with(e))
    }

    /// `{e : rank(set + e) = rank(set)}`.
    fn span(&self, set: ElementSet) -> ElementSet {
        let basis = self.basis_of(set);
        ElementSet::full(self.ground_size())
            .iter()
            .filter(|&e| set.contains(e) || !self.is_independent(basis.with(e)))
            .collect()
    }
}

/// Extends the independent set `base` greedily with members of `candidates`.
pub fn extend_greedily<M: MatroidOracle + ?Sized>(m: &M, base: ElementSet, candidates: ElementSet) -> ElementSet {
    let mut acc = base;
    for e in candidates - base {
        let next = acc.with(e);
        if m.is_independent(next) {
            acc = next;
        }
    }
    acc
}

pub fn rank<M: MatroidOracle + ?Sized>(m: &M, set: ElementSet) -> usize {
    m.rank(set)
}

pub fn span<M: MatroidOracle + ?Sized>(m: &M, set: ElementSet) -> ElementSet {
    m.span(set)
}

/// Maximum-weight independent set by the weight-sorted greedy. Elements with
/// non-positive weight are never taken; ties go to the smaller index.
pub fn max_weight_independent<M: MatroidOracle + ?Sized>(m: &M, weights: &[f64]) -> ElementSet {
    let n = m.ground_size().min(weights.len());
    let mut order: Vec<usize> = (0..n).filter(|&e| weights[e] > 0.0).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut acc = ElementSet::EMPTY;
    for e in order {
        if m.is_independent(acc.with(e)) {
            acc.insert(e);
        }
    }
    acc
}

/// Exhaustively checks that `m` is a matroid: the empty set is independent,
/// independence is closed under subsets, and the augmentation property holds
/// for every pair of independent sets.
pub fn validate_axioms<M: MatroidOracle + ?Sized>(m: &M) -> Result<()> {
    let n = m.ground_size();
    if n > EXHAUSTIVE_AXIOM_LIMIT {
        return Err(Error::TooLarge {
            what: "matroid axiom validation",
            limit: EXHAUSTIVE_AXIOM_LIMIT,
            n,
        });
    }
    if !m.is_independent(ElementSet::EMPTY) {
        return Err(Error::NotAMatroid("the empty set is dependent".into()));
    }
    let full = ElementSet::full(n);
    let independent: Vec<ElementSet> = full.subsets().filter(|&s| m.is_independent(s)).collect();
    for &s in &independent {
        for e in s {
            if !m.is_independent(s.without(e)) {
                return Err(Error::NotAMatroid(format!(
                    "{s} is independent but {} is not",
                    s.without(e)
                )));
            }
        }
    }
    // augmentation for |J| = |I| + 1 implies the general case
    for &i in &independent {
        for &j in &independent {
            if j.len() == i.len() + 1 && !(j - i).iter().any(|e| m.is_independent(i.with(e))) {
                return Err(Error::NotAMatroid(format!("augmentation fails for I = {i}, J = {j}")));
            }
        }
    }
    Ok(())
}

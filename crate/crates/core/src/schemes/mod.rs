//! Greedy OCRS constructions. A [`SchemeSpec`] names a constraint and the
//! scale `b`; preparing it against a point `x` yields a [`PreparedScheme`],
//! which draws one [`FeasibleFamily`] per trial.

mod chain;
mod constraint;
mod family;
mod spec;

pub use chain::{matroid_chain_decompose, ChainConfig, ChainDecomposition, ChainLayer, DynMatroid, EstimateMode};
pub use constraint::{deadline_matroid, Constraint, ConstraintSummary};
pub use family::{FeasibleFamily, Graph, GraphDescriptor, KnapsackMode, CAPACITY_TOL};
pub use spec::{
    knapsack_p_big, matching_k_probability, Bound, PreparedScheme, SchemeContext, SchemeDescriptor, SchemeSpec,
    MAX_ENUMERATED_OUTCOMES,
};

use crate::base::ElementSet;
use crate::error::{Error, Result};

/// Intersects families over a common ground set. A single family is returned
/// unchanged.
pub fn combine_families(mut parts: Vec<FeasibleFamily>) -> Result<FeasibleFamily> {
    let Some(first) = parts.first() else {
        return Err(crate::error::invalid("combine_families needs at least one family"));
    };
    let n = first.ground_size();
    if let Some(bad) = parts.iter().find(|p| p.ground_size() != n) {
        return Err(Error::GroundMismatch {
            expected: n,
            got: bad.ground_size(),
        });
    }
    if parts.len() == 1 {
        return Ok(parts.pop().expect("one part"));
    }
    Ok(FeasibleFamily::Intersection(parts))
}

/// Scans `order` and keeps each active element whose addition stays in the
/// family.
pub fn run_greedy_ocrs(family: &FeasibleFamily, order: &[usize], active: ElementSet) -> ElementSet {
    debug_assert!(is_permutation(order, family.ground_size()));
    let mut selected = ElementSet::EMPTY;
    for &e in order {
        if active.contains(e) && family.contains(selected.with(e)) {
            selected.insert(e);
        }
    }
    selected
}

/// Elements of `active` that are selectable against `active`.
pub fn selectable_set(family: &FeasibleFamily, active: ElementSet) -> ElementSet {
    active.iter().filter(|&e| family.selectable(active, e)).collect()
}

pub(crate) fn is_permutation(order: &[usize], n: usize) -> bool {
    order.len() == n && ElementSet::from_indices(order.iter().copied()) == ElementSet::full(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn first_come_on_rank_one() {
        let m: Arc<DynMatroid> = Arc::new(crate::matroids::Matroid::uniform(2, 1).unwrap());
        let x = crate::base::FractionalPoint::new(vec![0.25, 0.25]).unwrap();
        let mut rng = crate::base::SeedSpec::new(0).stream(0);
        let chain = matroid_chain_decompose(m, &x, &ChainConfig::new(0.5), &mut rng).unwrap();
        let f = FeasibleFamily::MatroidChain(Arc::new(chain));
        let both = ElementSet::full(2);
        assert_eq!(run_greedy_ocrs(&f, &[0, 1], both), ElementSet::singleton(0));
        assert_eq!(run_greedy_ocrs(&f, &[1, 0], both), ElementSet::singleton(1));
        assert_eq!(run_greedy_ocrs(&f, &[0, 1], ElementSet::EMPTY), ElementSet::EMPTY);
        assert_eq!(selectable_set(&f, both), ElementSet::EMPTY);
        assert_eq!(selectable_set(&f, ElementSet::singleton(0)), ElementSet::singleton(0));
    }

    #[test]
    fn combine_checks_ground_sets() {
        let a = FeasibleFamily::Matching {
            graph: Arc::new(Graph::triangle()),
            k: ElementSet::full(3),
        };
        let b = FeasibleFamily::Knapsack {
            sizes: Arc::from(vec![0.5, 0.5]),
            big: ElementSet::EMPTY,
            mode: KnapsackMode::Small,
        };
        assert!(combine_families(vec![a.clone(), b]).is_err());
        assert!(matches!(
            combine_families(vec![a]).unwrap(),
            FeasibleFamily::Matching { .. }
        ));
    }
}

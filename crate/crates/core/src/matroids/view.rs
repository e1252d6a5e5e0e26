use std::sync::Arc;

use super::MatroidOracle;
use crate::base::ElementSet;
use crate::error::{invalid, Result};

/// `(M / contracted) | kept`: a set is independent iff it lies in `kept` and
/// `rank(S ∪ contracted) = |S| + rank(contracted)`.
///
/// Independence is tested as `S ∪ B` independent in `M` for a fixed basis
/// `B` of the contracted set, which is equivalent.
pub struct MatroidView<M: MatroidOracle + ?Sized> {
    base: Arc<M>,
    contracted: ElementSet,
    contracted_basis: ElementSet,
    kept: ElementSet,
}

impl<M: MatroidOracle + ?Sized> Clone for MatroidView<M> {
    fn clone(&self) -> Self {
        MatroidView {
            base: self.base.clone(),
            contracted: self.contracted,
            contracted_basis: self.contracted_basis,
            kept: self.kept,
        }
    }
}

impl<M: MatroidOracle + ?Sized> std::fmt::Debug for MatroidView<M> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MatroidView")
            .field("contracted", &self.contracted)
            .field("kept", &self.kept)
            .finish()
    }
}

impl<M: MatroidOracle + ?Sized> MatroidView<M> {
    pub fn new(base: Arc<M>, contracted: ElementSet, kept: ElementSet) -> Result<Self> {
        if !contracted.is_disjoint(kept) {
            return Err(invalid(format!(
                "contracted set {contracted} and kept set {kept} overlap"
            )));
        }
        let full = ElementSet::full(base.ground_size());
        if !contracted.is_subset(full) || !kept.is_subset(full) {
            return Err(invalid("view sets must lie inside the ground set"));
        }
        let contracted_basis = base.basis_of(contracted);
        Ok(MatroidView {
            base,
            contracted,
            contracted_basis,
            kept,
        })
    }

    pub fn contracted(&self) -> ElementSet {
        self.contracted
    }

    pub fn kept(&self) -> ElementSet {
        self.kept
    }

    pub fn contracted_rank(&self) -> usize {
        self.contracted_basis.len()
    }

    pub fn base(&self) -> &Arc<M> {
        &self.base
    }
}

impl<M: MatroidOracle + ?Sized> MatroidOracle for MatroidView<M> {
    fn ground_size(&self) -> usize {
        self.base.ground_size()
    }

    fn is_independent(&self, set: ElementSet) -> bool {
        set.is_subset(self.kept) && self.base.is_independent(set | self.contracted_basis)
    }
}

/// `contract_restrict(M, contracted, kept)`.
pub fn contract_restrict<M: MatroidOracle + ?Sized>(
    m: Arc<M>,
    contracted: ElementSet,
    kept: ElementSet,
) -> Result<MatroidView<M>> {
    MatroidView::new(m, contracted, kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroids::Matroid;

    #[test]
    fn identity_view_agrees_with_base() {
        let m = Arc::new(Matroid::complete_graph(4).unwrap());
        let v = contract_restrict(m.clone(), ElementSet::EMPTY, ElementSet::full(6)).unwrap();
        for s in ElementSet::full(6).subsets() {
            assert_eq!(v.is_independent(s), m.is_independent(s));
        }
    }

    #[test]
    fn uniform_contraction() {
        let m = Arc::new(Matroid::uniform(3, 2).unwrap());
        let v = contract_restrict(m, ElementSet::singleton(0), ElementSet::from_indices([1, 2])).unwrap();
        assert!(v.is_independent(ElementSet::singleton(1)));
        assert!(!v.is_independent(ElementSet::from_indices([1, 2])));
        assert_eq!(v.contracted_rank(), 1);
    }

    #[test]
    fn rank_characterization_holds() {
        let m = Arc::new(Matroid::laminar(6, &[vec![0, 1, 2, 3], vec![0, 1]], &[2, 1]).unwrap());
        for c in ElementSet::full(6).subsets() {
            let kept = ElementSet::full(6) - c;
            let v = contract_restrict(m.clone(), c, kept).unwrap();
            for s in kept.subsets() {
                let expected = m.rank(s | c) == s.len() + m.rank(c);
                assert_eq!(v.is_independent(s), expected);
            }
        }
    }

    #[test]
    fn graphic_edge_contraction() {
        // contract edge 0 = (0,1) of K4: vertices 0 and 1 merge into one
        let m = Arc::new(Matroid::complete_graph(4).unwrap());
        let kept = ElementSet::full(6).without(0);
        let v = contract_restrict(m, ElementSet::singleton(0), kept).unwrap();
        // K4 / (0,1): merged vertex a, others 2, 3. Original edges
        // 1=(0,2)->(a,2) 2=(0,3)->(a,3) 3=(1,2)->(a,2) 4=(1,3)->(a,3) 5=(2,3)
        let contracted_edges = [(0, 0), (0, 1), (0, 2), (0, 1), (0, 2), (1, 2)];
        let g = Matroid::graphic(3, &contracted_edges[1..]).unwrap();
        for s in kept.subsets() {
            let shifted = ElementSet::from_indices(s.iter().map(|e| e - 1));
            assert_eq!(v.is_independent(s), g.is_independent(shifted), "{s}");
        }
    }

    #[test]
    fn overlap_rejected() {
        let m = Arc::new(Matroid::uniform(3, 2).unwrap());
        assert!(contract_restrict(m, ElementSet::singleton(0), ElementSet::full(3)).is_err());
    }
}

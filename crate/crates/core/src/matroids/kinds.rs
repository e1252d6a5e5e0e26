use serde::{Deserialize, Serialize};

use super::{validate_axioms, MatroidOracle, EXHAUSTIVE_AXIOM_LIMIT};
use crate::base::{ElementSet, MAX_ELEMENTS};
use crate::error::{invalid, Error, Result};

/// Concrete matroids over a ground set of at most 64 elements.
#[derive(Clone, Debug, PartialEq)]
pub enum Matroid {
    /// Every set of size at most `k` is independent.
    Uniform { n: usize, k: usize },
    /// At most `capacities[i]` elements from block `i`; elements outside
    /// every block are unconstrained.
    Partition {
        n: usize,
        blocks: Vec<ElementSet>,
        capacities: Vec<usize>,
    },
    /// Forests of a multigraph; element `i` is edge `edges[i]`. Vertices are
    /// relabelled densely at construction.
    Graphic {
        vertices: usize,
        edges: Vec<(usize, usize)>,
    },
    /// At most `capacities[i]` elements from `sets[i]`, for a laminar family.
    Laminar {
        n: usize,
        sets: Vec<ElementSet>,
        capacities: Vec<usize>,
    },
    /// Subsets of the listed bases.
    Explicit { n: usize, bases: Vec<ElementSet> },
}

/// JSON matroid descriptors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MatroidDescriptor {
    Uniform {
        n: usize,
        k: usize,
    },
    Graphic {
        vertices: usize,
        edges: Vec<[usize; 2]>,
    },
    Partition {
        blocks: Vec<Vec<usize>>,
        capacities: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
    Laminar {
        sets: Vec<Vec<usize>>,
        capacities: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
    Explicit {
        n: usize,
        bases: Vec<Vec<usize>>,
    },
}

fn check_n(n: usize, field: &str) -> Result<()> {
    if n == 0 || n > MAX_ELEMENTS {
        return Err(invalid(format!(
            "{field}: ground set size must be in 1..={MAX_ELEMENTS}, got {n}"
        )));
    }
    Ok(())
}

fn to_set(items: &[usize], n: usize, field: &str) -> Result<ElementSet> {
    let mut s = ElementSet::EMPTY;
    for &e in items {
        if e >= n {
            return Err(invalid(format!("{field}: element {e} outside ground set of size {n}")));
        }
        s.insert(e);
    }
    Ok(s)
}

fn inferred_n(n: Option<usize>, lists: &[Vec<usize>]) -> usize {
    n.unwrap_or_else(|| lists.iter().flatten().copied().max().map_or(0, |m| m + 1))
}

impl Matroid {
    pub fn uniform(n: usize, k: usize) -> Result<Self> {
        check_n(n, "uniform.n")?;
        Ok(Matroid::Uniform { n, k: k.min(n) })
    }

    pub fn partition(n: usize, blocks: &[Vec<usize>], capacities: &[usize]) -> Result<Self> {
        check_n(n, "partition.n")?;
        if blocks.len() != capacities.len() {
            return Err(invalid(format!(
                "partition.capacities: expected {} entries, got {}",
                blocks.len(),
                capacities.len()
            )));
        }
        let sets = blocks
            .iter()
            .map(|b| to_set(b, n, "partition.blocks"))
            .collect::<Result<Vec<_>>>()?;
        let mut seen = ElementSet::EMPTY;
        for s in &sets {
            if !s.is_disjoint(seen) {
                return Err(invalid("partition.blocks: blocks must be disjoint"));
            }
            seen = seen | *s;
        }
        Ok(Matroid::Partition {
            n,
            blocks: sets,
            capacities: capacities.to_vec(),
        })
    }

    pub fn graphic(vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        check_n(edges.len(), "graphic.edges")?;
        let mut relabel = std::collections::BTreeMap::new();
        let mut dense = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= vertices || v >= vertices {
                return Err(invalid(format!(
                    "graphic.edges: edge ({u},{v}) references a vertex outside 0..{vertices}"
                )));
            }
            let next = relabel.len();
            let a = *relabel.entry(u).or_insert(next);
            let next = relabel.len();
            let b = *relabel.entry(v).or_insert(next);
            dense.push((a, b));
        }
        Ok(Matroid::Graphic {
            vertices: relabel.len(),
            edges: dense,
        })
    }

    /// The graphic matroid of the complete graph on `k` vertices, edges in
    /// lexicographic order.
    pub fn complete_graph(k: usize) -> Result<Self> {
        let edges: Vec<_> = (0..k).flat_map(|u| (u + 1..k).map(move |v| (u, v))).collect();
        Self::graphic(k, &edges)
    }

    pub fn laminar(n: usize, sets: &[Vec<usize>], capacities: &[usize]) -> Result<Self> {
        check_n(n, "laminar.n")?;
        if sets.len() != capacities.len() {
            return Err(invalid(format!(
                "laminar.capacities: expected {} entries, got {}",
                sets.len(),
                capacities.len()
            )));
        }
        let sets = sets
            .iter()
            .map(|s| to_set(s, n, "laminar.sets"))
            .collect::<Result<Vec<_>>>()?;
        for (i, a) in sets.iter().enumerate() {
            for b in &sets[i + 1..] {
                if !(a.is_disjoint(*b) || a.is_subset(*b) || b.is_subset(*a)) {
                    return Err(invalid(format!(
                        "laminar.sets: {a} and {b} are neither nested nor disjoint"
                    )));
                }
            }
        }
        Ok(Matroid::Laminar {
            n,
            sets,
            capacities: capacities.to_vec(),
        })
    }

    /// A matroid given by its bases. The basis exchange axiom is verified
    /// exhaustively when `n` is at most 12.
    pub fn explicit(n: usize, bases: &[Vec<usize>]) -> Result<Self> {
        check_n(n, "explicit.n")?;
        if bases.is_empty() {
            return Err(invalid("explicit.bases: at least one basis is required"));
        }
        let sets = bases
            .iter()
            .map(|b| to_set(b, n, "explicit.bases"))
            .collect::<Result<Vec<_>>>()?;
        let r = sets[0].len();
        if sets.iter().any(|b| b.len() != r) {
            return Err(Error::NotAMatroid("bases differ in size".into()));
        }
        let m = Matroid::Explicit { n, bases: sets };
        if n <= EXHAUSTIVE_AXIOM_LIMIT {
            validate_axioms(&m)?;
        }
        Ok(m)
    }

    pub fn from_descriptor(d: &MatroidDescriptor) -> Result<Self> {
        match d {
            MatroidDescriptor::Uniform { n, k } => Self::uniform(*n, *k),
            MatroidDescriptor::Graphic { vertices, edges } => {
                let edges: Vec<_> = edges.iter().map(|e| (e[0], e[1])).collect();
                Self::graphic(*vertices, &edges)
            }
            MatroidDescriptor::Partition { blocks, capacities, n } => {
                Self::partition(inferred_n(*n, blocks), blocks, capacities)
            }
            MatroidDescriptor::Laminar { sets, capacities, n } => Self::laminar(inferred_n(*n, sets), sets, capacities),
            MatroidDescriptor::Explicit { n, bases } => Self::explicit(*n, bases),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: MatroidDescriptor = serde_json::from_str(text).map_err(|e| invalid(format!("matroid: {e}")))?;
        Self::from_descriptor(&d)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Matroid::Uniform { .. } => "uniform",
            Matroid::Partition { .. } => "partition",
            Matroid::Graphic { .. } => "graphic",
            Matroid::Laminar { .. } => "laminar",
            Matroid::Explicit { .. } => "explicit",
        }
    }
}

fn find(parent: &mut [u8], mut v: usize) -> usize {
    while parent[v] as usize != v {
        let p = parent[v] as usize;
        parent[v] = parent[p];
        v = p;
    }
    v
}

impl MatroidOracle for Matroid {
    fn ground_size(&self) -> usize {
        match self {
            Matroid::Uniform { n, .. }
            | Matroid::Partition { n, .. }
            | Matroid::Laminar { n, .. }
            | Matroid::Explicit { n, .. } => *n,
            Matroid::Graphic { edges, .. } => edges.len(),
        }
    }

    fn is_independent(&self, set: ElementSet) -> bool {
        if !set.is_subset(ElementSet::full(self.ground_size())) {
            return false;
        }
        match self {
            Matroid::Uniform { k, .. } => set.len() <= *k,
            Matroid::Partition { blocks, capacities, .. } => {
                blocks.iter().zip(capacities).all(|(b, &c)| (set & *b).len() <= c)
            }
            Matroid::Laminar { sets, capacities, .. } => {
                sets.iter().zip(capacities).all(|(s, &c)| (set & *s).len() <= c)
            }
            Matroid::Explicit { bases, .. } => bases.iter().any(|b| set.is_subset(*b)),
            Matroid::Graphic { edges, .. } => {
                // at most 128 distinct vertices after relabelling
                let mut parent = [0u8; 128];
                for (i, p) in parent.iter_mut().enumerate() {
                    *p = i as u8;
                }
                for e in set {
                    let (u, v) = edges[e];
                    let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
                    if ru == rv {
                        return false;
                    }
                    parent[ru] = rv as u8;
                }
                true
            }
        }
    }
}

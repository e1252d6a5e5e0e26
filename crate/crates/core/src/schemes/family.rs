use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::chain::ChainDecomposition;
use crate::base::{ElementSet, MAX_ELEMENTS};
use crate::error::{invalid, Result};

/// Absolute tolerance on the knapsack capacity `Σ s_e ≤ 1`.
pub const CAPACITY_TOL: f64 = 1e-12;

/// A simple undirected graph whose edges form the ground set.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    vertices: usize,
    edges: Vec<(usize, usize)>,
    /// Edges sharing an endpoint with edge `i`, excluding `i`.
    adjacent: Vec<ElementSet>,
}

/// JSON graph descriptor `{"vertices": int, "edges": [[u, v], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDescriptor {
    pub vertices: usize,
    pub edges: Vec<[usize; 2]>,
}

impl Graph {
    pub fn new(vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if edges.is_empty() || edges.len() > MAX_ELEMENTS {
            return Err(invalid(format!(
                "graph.edges: need 1..={MAX_ELEMENTS} edges, got {}",
                edges.len()
            )));
        }
        for &(u, v) in edges {
            if u >= vertices || v >= vertices {
                return Err(invalid(format!(
                    "graph.edges: edge ({u},{v}) references a vertex outside 0..{vertices}"
                )));
            }
            if u == v {
                return Err(invalid(format!("graph.edges: self-loop at vertex {u}")));
            }
        }
        let adjacent = edges
            .iter()
            .enumerate()
            .map(|(i, &(u, v))| {
                edges
                    .iter()
                    .enumerate()
                    .filter(|&(j, &(a, b))| j != i && (a == u || a == v || b == u || b == v))
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect();
        Ok(Graph {
            vertices,
            edges: edges.to_vec(),
            adjacent,
        })
    }

    pub fn from_descriptor(d: &GraphDescriptor) -> Result<Self> {
        let edges: Vec<_> = d.edges.iter().map(|e| (e[0], e[1])).collect();
        Self::new(d.vertices, &edges)
    }

    pub fn triangle() -> Self {
        Self::new(3, &[(0, 1), (1, 2), (0, 2)]).expect("valid triangle")
    }

    pub fn complete(k: usize) -> Result<Self> {
        let edges: Vec<_> = (0..k).flat_map(|u| (u + 1..k).map(move |v| (u, v))).collect();
        Self::new(k, &edges)
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn adjacent(&self, edge: usize) -> ElementSet {
        self.adjacent[edge]
    }

    /// Edges incident to vertex `v`.
    pub fn incident(&self, v: usize) -> ElementSet {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| a == v || b == v)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_matching(&self, s: ElementSet) -> bool {
        s.iter().all(|e| self.adjacent[e].is_disjoint(s))
    }
}

/// Which half of the knapsack a sampled family accepts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum KnapsackMode {
    Big,
    Small,
}

pub(crate) fn fits(sizes: &[f64], s: ElementSet) -> bool {
    s.iter().map(|e| sizes[e]).sum::<f64>() <= 1.0 + CAPACITY_TOL
}

/// One sampled down-closed family `F_x ⊆ F`.
#[derive(Clone, Debug)]
pub enum FeasibleFamily {
    /// Per-layer independence in the layer views of a chain decomposition.
    MatroidChain(Arc<ChainDecomposition>),
    /// Matchings using only edges of the sampled set `k`.
    Matching { graph: Arc<Graph>, k: ElementSet },
    /// Capacity-feasible sets inside one half of the big/small split.
    Knapsack {
        sizes: Arc<[f64]>,
        big: ElementSet,
        mode: KnapsackMode,
    },
    /// Conjunction of families over the same ground set.
    Intersection(Vec<FeasibleFamily>),
}

impl FeasibleFamily {
    pub fn ground_size(&self) -> usize {
        match self {
            FeasibleFamily::MatroidChain(c) => c.ground_size(),
            FeasibleFamily::Matching { graph, .. } => graph.edge_count(),
            FeasibleFamily::Knapsack { sizes, .. } => sizes.len(),
            FeasibleFamily::Intersection(parts) => parts.first().map_or(0, |p| p.ground_size()),
        }
    }

    /// Membership `S ∈ F_x`.
    pub fn contains(&self, s: ElementSet) -> bool {
        if !s.is_subset(ElementSet::full(self.ground_size())) {
            return false;
        }
        match self {
            FeasibleFamily::MatroidChain(c) => c.contains(s),
            FeasibleFamily::Matching { graph, k } => s.is_subset(*k) && graph.is_matching(s),
            FeasibleFamily::Knapsack { sizes, big, mode } => {
                let side_ok = match mode {
                    KnapsackMode::Big => s.is_subset(*big),
                    KnapsackMode::Small => s.is_disjoint(*big),
                };
                side_ok && fits(sizes, s)
            }
            FeasibleFamily::Intersection(parts) => parts.iter().all(|p| p.contains(s)),
        }
    }

    /// Whether `I ∪ {e} ∈ F_x` for every `I ⊆ active` with `I ∈ F_x`.
    pub fn selectable(&self, active: ElementSet, e: usize) -> bool {
        match self {
            FeasibleFamily::MatroidChain(c) => c.selectable(active, e),
            FeasibleFamily::Matching { graph, k } => k.contains(e) && graph.adjacent(e).is_disjoint(active & *k),
            FeasibleFamily::Knapsack { sizes, big, mode } => {
                let side = match mode {
                    KnapsackMode::Big => *big,
                    KnapsackMode::Small => ElementSet::full(sizes.len()) - *big,
                };
                if !side.contains(e) || !fits(sizes, ElementSet::singleton(e)) {
                    return false;
                }
                !exists_blocking_subset(sizes, (active & side).without(e), sizes[e])
            }
            FeasibleFamily::Intersection(parts) => {
                if parts.iter().all(|p| p.selectable(active, e)) {
                    return true;
                }
                self.selectable_by_search(active, e)
            }
        }
    }

    /// Exact quantifier check by depth-first enumeration of the members of
    /// the family inside `active ∖ {e}`. Down-closedness lets the search
    /// extend only sets that are already members.
    fn selectable_by_search(&self, active: ElementSet, e: usize) -> bool {
        if !self.contains(ElementSet::singleton(e)) {
            return false;
        }
        let candidates: Vec<usize> = active
            .without(e)
            .iter()
            .filter(|&g| self.contains(ElementSet::singleton(g)))
            .collect();
        fn dfs(f: &FeasibleFamily, cands: &[usize], from: usize, cur: ElementSet, e: usize) -> bool {
            for i in from..cands.len() {
                let next = cur.with(cands[i]);
                if f.contains(next) {
                    if !f.contains(next.with(e)) {
                        return false;
                    }
                    if !dfs(f, cands, i + 1, next, e) {
                        return false;
                    }
                }
            }
            true
        }
        dfs(self, &candidates, 0, ElementSet::EMPTY, e)
    }
}

/// Whether some `I ⊆ pool` fits the knapsack while `I + item` does not.
fn exists_blocking_subset(sizes: &[f64], pool: ElementSet, item: f64) -> bool {
    let total: f64 = pool.iter().map(|g| sizes[g]).sum();
    let limit = 1.0 + CAPACITY_TOL;
    if total + item <= limit {
        return false;
    }
    let mut items: Vec<f64> = pool.iter().map(|g| sizes[g]).collect();
    items.sort_by(|a, b| b.total_cmp(a));
    // suffix sums bound what the remaining items can still add
    let mut rest = vec![0.0; items.len() + 1];
    for i in (0..items.len()).rev() {
        rest[i] = rest[i + 1] + items[i];
    }
    fn dfs(items: &[f64], rest: &[f64], i: usize, load: f64, item: f64, limit: f64) -> bool {
        if load + item > limit {
            return true;
        }
        if i == items.len() || load + rest[i] + item <= limit {
            return false;
        }
        if load + items[i] <= limit && dfs(items, rest, i + 1, load + items[i], item, limit) {
            return true;
        }
        dfs(items, rest, i + 1, load, item, limit)
    }
    dfs(&items, &rest, 0, 0.0, item, limit)
}

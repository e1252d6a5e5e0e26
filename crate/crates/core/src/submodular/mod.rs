//! Submodular objectives: coverage, weighted matroid rank and directed cut
//! functions, the multilinear extension, OCRS-based rounding, continuous
//! greedy, and submodular stochastic probing.

mod greedy;
mod multilinear;
mod ocrs;

pub use greedy::{continuous_greedy, GreedyOptions, GreedyRegion};
pub use multilinear::{multilinear_f, Multilinear, ValueTable, EXACT_MULTILINEAR_LIMIT};
pub use ocrs::{
    characteristic_crs, half_subsample_value, ocrs_submodular_value, run_submodular_probing, SubmodularOptions,
    SubmodularProbingReport, SubmodularReport,
};

use std::sync::Arc;

use serde::Serialize;
use serde_json::Value;

use crate::base::ElementSet;
use crate::error::{invalid, Error, Result};
use crate::matroids::max_weight_independent;
use crate::schemes::DynMatroid;

/// Largest ground set on which submodularity is verified at construction.
pub const EXHAUSTIVE_SUBMODULAR_LIMIT: usize = 8;

/// Tolerance for the submodularity and monotonicity checks.
const CHECK_TOL: f64 = 1e-9;

/// A nonnegative set function with a value oracle.
#[derive(Clone)]
pub enum SubmodularFunction {
    /// `f(S) = Σ_e w_e` over `S`.
    Modular { weights: Vec<f64> },
    /// Weight of the universe items covered by `S`.
    Coverage {
        universe_weights: Vec<f64>,
        covers: Vec<Vec<usize>>,
    },
    /// Largest weight of an independent subset of `S`.
    MatroidRank {
        matroid: Arc<DynMatroid>,
        weights: Vec<f64>,
    },
    /// Total weight of arcs leaving `S`; elements are nodes.
    DirectedCut {
        nodes: usize,
        arcs: Vec<(usize, usize, f64)>,
    },
}

impl std::fmt::Debug for SubmodularFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SubmodularFunction::Modular { weights } => f.debug_struct("Modular").field("weights", weights).finish(),
            SubmodularFunction::Coverage {
                universe_weights,
                covers,
            } => f
                .debug_struct("Coverage")
                .field("universe_weights", universe_weights)
                .field("covers", covers)
                .finish(),
            SubmodularFunction::MatroidRank { matroid, weights } => f
                .debug_struct("MatroidRank")
                .field("n", &matroid.ground_size())
                .field("weights", weights)
                .finish(),
            SubmodularFunction::DirectedCut { nodes, arcs } => f
                .debug_struct("DirectedCut")
                .field("nodes", nodes)
                .field("arcs", arcs)
                .finish(),
        }
    }
}

fn check_weights(w: &[f64], field: &str) -> Result<()> {
    match w.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        Some(i) => Err(invalid(format!("{field}[{i}] = {} must be a nonnegative number", w[i]))),
        None => Ok(()),
    }
}

impl SubmodularFunction {
    pub fn modular(weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights, "weights")?;
        Self::checked(SubmodularFunction::Modular { weights })
    }

    pub fn coverage(universe_weights: Vec<f64>, covers: Vec<Vec<usize>>) -> Result<Self> {
        check_weights(&universe_weights, "universe_weights")?;
        for (e, c) in covers.iter().enumerate() {
            if let Some(u) = c.iter().find(|&&u| u >= universe_weights.len()) {
                return Err(invalid(format!(
                    "covers[{e}]: item {u} outside a universe of {}",
                    universe_weights.len()
                )));
            }
        }
        Self::checked(SubmodularFunction::Coverage {
            universe_weights,
            covers,
        })
    }

    pub fn matroid_rank(matroid: Arc<DynMatroid>, weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights, "weights")?;
        if weights.len() != matroid.ground_size() {
            return Err(Error::GroundMismatch {
                expected: matroid.ground_size(),
                got: weights.len(),
            });
        }
        Self::checked(SubmodularFunction::MatroidRank { matroid, weights })
    }

    pub fn directed_cut(nodes: usize, arcs: Vec<(usize, usize, f64)>) -> Result<Self> {
        for (i, &(u, v, w)) in arcs.iter().enumerate() {
            if u >= nodes || v >= nodes {
                return Err(invalid(format!("arcs[{i}]: endpoint outside 0..{nodes}")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(invalid(format!("arcs[{i}]: weight {w} must be a nonnegative number")));
            }
        }
        Self::checked(SubmodularFunction::DirectedCut { nodes, arcs })
    }

    fn checked(f: Self) -> Result<Self> {
        let n = f.ground_size();
        if n == 0 || n > crate::base::MAX_ELEMENTS {
            return Err(invalid(format!("function: ground set size {n} is unsupported")));
        }
        if n <= EXHAUSTIVE_SUBMODULAR_LIMIT {
            f.validate()?;
        }
        Ok(f)
    }

    /// Coverage `{"universe_weights": […], "covers": [[…], …]}`, cut
    /// `{"arcs": [[u, v, w], …], "n": optional}`, or modular `{"weights": […]}`.
    pub fn from_value(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| invalid("function: expected a JSON object"))?;
        let parse = |name: &str| -> Result<Value> {
            obj.get(name)
                .cloned()
                .ok_or_else(|| invalid(format!("function.{name}: missing")))
        };
        let allow = |keys: &[&str]| -> Result<()> {
            match obj.keys().find(|k| !keys.contains(&k.as_str())) {
                Some(k) => Err(invalid(format!("function: unknown field {k:?}"))),
                None => Ok(()),
            }
        };
        if obj.contains_key("covers") {
            allow(&["universe_weights", "covers"])?;
            let w: Vec<f64> = serde_json::from_value(parse("universe_weights")?)
                .map_err(|e| invalid(format!("function.universe_weights: {e}")))?;
            let c: Vec<Vec<usize>> =
                serde_json::from_value(parse("covers")?).map_err(|e| invalid(format!("function.covers: {e}")))?;
            Self::coverage(w, c)
        } else if obj.contains_key("arcs") {
            allow(&["arcs", "n"])?;
            let raw: Vec<(usize, usize, f64)> =
                serde_json::from_value(parse("arcs")?).map_err(|e| invalid(format!("function.arcs: {e}")))?;
            let inferred = raw.iter().map(|a| a.0.max(a.1) + 1).max().unwrap_or(0);
            let n = match obj.get("n") {
                Some(n) => n.as_u64().ok_or_else(|| invalid("function.n: expected an integer"))? as usize,
                None => inferred,
            };
            Self::directed_cut(n, raw)
        } else if obj.contains_key("weights") {
            allow(&["weights"])?;
            let w: Vec<f64> =
                serde_json::from_value(parse("weights")?).map_err(|e| invalid(format!("function.weights: {e}")))?;
            Self::modular(w)
        } else {
            Err(invalid("function: expected one of covers, arcs or weights"))
        }
    }

    pub fn ground_size(&self) -> usize {
        match self {
            SubmodularFunction::Modular { weights } => weights.len(),
            SubmodularFunction::Coverage { covers, .. } => covers.len(),
            SubmodularFunction::MatroidRank { weights, .. } => weights.len(),
            SubmodularFunction::DirectedCut { nodes, .. } => *nodes,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SubmodularFunction::Modular { .. } => "modular",
            SubmodularFunction::Coverage { .. } => "coverage",
            SubmodularFunction::MatroidRank { .. } => "matroid-rank",
            SubmodularFunction::DirectedCut { .. } => "directed-cut",
        }
    }

    pub fn is_monotone(&self) -> bool {
        !matches!(self, SubmodularFunction::DirectedCut { .. })
    }

    pub fn value(&self, s: ElementSet) -> f64 {
        match self {
            SubmodularFunction::Modular { weights } => s.iter().map(|e| weights[e]).sum(),
            SubmodularFunction::Coverage {
                universe_weights,
                covers,
            } => {
                let mut covered = vec![false; universe_weights.len()];
                for e in s {
                    for &u in &covers[e] {
                        covered[u] = true;
                    }
                }
                covered
                    .iter()
                    .zip(universe_weights)
                    .filter(|(c, _)| **c)
                    .map(|(_, w)| w)
                    .sum()
            }
            SubmodularFunction::MatroidRank { matroid, weights } => {
                let masked: Vec<f64> = (0..weights.len())
                    .map(|e| if s.contains(e) { weights[e] } else { 0.0 })
                    .collect();
                max_weight_independent(matroid.as_ref(), &masked)
                    .iter()
                    .map(|e| weights[e])
                    .sum()
            }
            SubmodularFunction::DirectedCut { arcs, .. } => arcs
                .iter()
                .filter(|(u, v, _)| s.contains(*u) && !s.contains(*v))
                .map(|a| a.2)
                .sum(),
        }
    }

    /// Exhaustive check of nonnegativity, submodularity (as decreasing
    /// marginals `f(S+e) + f(S+g) ≥ f(S+e+g) + f(S)`) and, for monotone
    /// kinds, monotonicity.
    pub fn validate(&self) -> Result<()> {
        let n = self.ground_size();
        if n > EXHAUSTIVE_SUBMODULAR_LIMIT {
            return Err(Error::TooLarge {
                what: "submodularity validation",
                limit: EXHAUSTIVE_SUBMODULAR_LIMIT,
                n,
            });
        }
        let table = ValueTable::build(self)?;
        let full = ElementSet::full(n);
        for s in full.subsets() {
            let fs = table.value(s);
            if fs < -CHECK_TOL {
                return Err(Error::NotSubmodular(format!("f({s}) = {fs} is negative")));
            }
            let outside: Vec<usize> = (full - s).to_vec();
            for (i, &e) in outside.iter().enumerate() {
                let fe = table.value(s.with(e));
                if self.is_monotone() && fe < fs - CHECK_TOL {
                    return Err(Error::NotSubmodular(format!("f decreases from {s} to {}", s.with(e))));
                }
                for &g in &outside[i + 1..] {
                    if fe + table.value(s.with(g)) < table.value(s.with(e).with(g)) + fs - CHECK_TOL {
                        return Err(Error::NotSubmodular(format!(
                            "marginal of {g} grows from {} to {}",
                            s,
                            s.with(e)
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Function summary for reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionSummary {
    pub kind: &'static str,
    pub n: usize,
    pub monotone: bool,
}

impl From<&SubmodularFunction> for FunctionSummary {
    fn from(f: &SubmodularFunction) -> Self {
        FunctionSummary {
            kind: f.kind(),
            n: f.ground_size(),
            monotone: f.is_monotone(),
        }
    }
}

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;
use serde_json::Value;

use super::chain::{ChainConfig, DynMatroid};
use super::family::{fits, Graph, GraphDescriptor};
use super::spec::SchemeSpec;
use crate::base::{ElementSet, FractionalPoint, FEAS_TOL};
use crate::error::{invalid, Error, Result};
use crate::matroids::{in_scaled_matroid_polytope, max_polytope_scale, Matroid, MatroidDescriptor};

/// A down-closed family `F` together with its relaxation `P`, as used for
/// the inner and outer constraints of probing.
#[derive(Clone)]
pub enum Constraint {
    Matroid(Arc<DynMatroid>),
    /// Unit-capacity knapsack.
    Knapsack(Arc<[f64]>),
    /// Matchings of a graph whose edges are the elements.
    Matching(Arc<Graph>),
    /// Intersection of all parts.
    All(Vec<Constraint>),
}

impl std::fmt::Debug for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Constraint::Matroid(m) => write!(f, "Matroid(n = {})", m.ground_size()),
            Constraint::Knapsack(s) => f.debug_tuple("Knapsack").field(s).finish(),
            Constraint::Matching(g) => f.debug_tuple("Matching").field(g).finish(),
            Constraint::All(parts) => f.debug_tuple("All").field(parts).finish(),
        }
    }
}

/// Serialized summary of a constraint for reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ConstraintSummary {
    Matroid { n: usize },
    Knapsack { sizes: Vec<f64> },
    Matching { vertices: usize, edges: Vec<[usize; 2]> },
    All { parts: Vec<ConstraintSummary> },
}

impl Constraint {
    pub fn matroid(m: impl crate::matroids::MatroidOracle + 'static) -> Self {
        Constraint::Matroid(Arc::new(m))
    }

    pub fn knapsack(sizes: Vec<f64>) -> Result<Self> {
        if let Some(s) = sizes.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(invalid(format!("knapsack.sizes: {s} is outside [0,1]")));
        }
        Ok(Constraint::Knapsack(sizes.into()))
    }

    /// Parses `{"type": ...}`: any matroid descriptor type, `knapsack` with
    /// `sizes`, `matching` with `vertices` and `edges`, or `all` with `parts`.
    pub fn from_value(v: &Value) -> Result<Self> {
        let kind = v
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| invalid("constraint.type: missing or not a string"))?;
        let field = |name: &str| v.get(name).ok_or_else(|| invalid(format!("{kind}.{name}: missing")));
        match kind {
            "knapsack" => {
                let sizes: Vec<f64> = serde_json::from_value(field("sizes")?.clone())
                    .map_err(|e| invalid(format!("knapsack.sizes: {e}")))?;
                Self::knapsack(sizes)
            }
            "matching" => {
                let mut d = v.clone();
                if let Some(o) = d.as_object_mut() {
                    o.remove("type");
                }
                let g: GraphDescriptor = serde_json::from_value(d).map_err(|e| invalid(format!("matching: {e}")))?;
                Ok(Constraint::Matching(Arc::new(Graph::from_descriptor(&g)?)))
            }
            "all" => {
                let parts = field("parts")?
                    .as_array()
                    .ok_or_else(|| invalid("all.parts: expected an array"))?;
                if parts.is_empty() {
                    return Err(invalid("all.parts: at least one part is required"));
                }
                let parts = parts.iter().map(Self::from_value).collect::<Result<Vec<_>>>()?;
                Self::all(parts)
            }
            _ => {
                let d: MatroidDescriptor =
                    serde_json::from_value(v.clone()).map_err(|e| invalid(format!("constraint ({kind}): {e}")))?;
                Ok(Constraint::matroid(Matroid::from_descriptor(&d)?))
            }
        }
    }

    pub fn all(parts: Vec<Constraint>) -> Result<Self> {
        let n = parts.first().map_or(0, |p| p.ground_size());
        if let Some(p) = parts.iter().find(|p| p.ground_size() != n) {
            return Err(Error::GroundMismatch {
                expected: n,
                got: p.ground_size(),
            });
        }
        Ok(Constraint::All(parts))
    }

    pub fn ground_size(&self) -> usize {
        match self {
            Constraint::Matroid(m) => m.ground_size(),
            Constraint::Knapsack(s) => s.len(),
            Constraint::Matching(g) => g.edge_count(),
            Constraint::All(parts) => parts.first().map_or(0, |p| p.ground_size()),
        }
    }

    /// Membership in `F`.
    pub fn contains(&self, s: ElementSet) -> bool {
        match self {
            Constraint::Matroid(m) => m.is_independent(s),
            Constraint::Knapsack(sizes) => fits(sizes, s),
            Constraint::Matching(g) => g.is_matching(s),
            Constraint::All(parts) => parts.iter().all(|p| p.contains(s)),
        }
    }

    /// Whether `x ∈ b·P`, up to [`FEAS_TOL`].
    pub fn in_scaled_polytope(&self, x: &FractionalPoint, b: f64) -> Result<bool> {
        match self {
            Constraint::Matroid(m) => in_scaled_matroid_polytope(m.as_ref(), x, b),
            Constraint::Knapsack(sizes) => {
                let load: f64 = sizes.iter().zip(x.values()).map(|(s, v)| s * v).sum();
                Ok(load <= b + FEAS_TOL)
            }
            Constraint::Matching(g) => Ok((0..g.vertices()).all(|v| x.sum_over(g.incident(v)) <= b + FEAS_TOL)),
            Constraint::All(parts) => {
                for p in parts {
                    if !p.in_scaled_polytope(x, b)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// The greedy OCRS for this relaxation at scale `b`: the chain scheme for
    /// matroids, the randomized matching scheme, the knapsack scheme, and the
    /// combination of those for intersections.
    pub fn scheme(&self, b: f64, eps: f64) -> Result<SchemeSpec> {
        Ok(match self {
            Constraint::Matroid(m) => SchemeSpec::matroid_with(m.clone(), ChainConfig::new(b).with_eps(eps)),
            Constraint::Knapsack(sizes) => SchemeSpec::knapsack(sizes.to_vec(), b),
            Constraint::Matching(g) => SchemeSpec::matching((**g).clone(), b, false),
            Constraint::All(parts) => {
                SchemeSpec::intersect(parts.iter().map(|p| p.scheme(b, eps)).collect::<Result<Vec<_>>>()?)?
            }
        })
    }

    /// Smallest `λ` with `y ∈ λ·P`.
    fn scale_of(&self, y: &[f64]) -> Result<f64> {
        Ok(match self {
            Constraint::Matroid(m) => max_polytope_scale(m.as_ref(), y)?,
            Constraint::Knapsack(sizes) => sizes.iter().zip(y).map(|(s, v)| s * v).sum(),
            Constraint::Matching(g) => (0..g.vertices())
                .map(|v| g.incident(v).iter().map(|e| y[e]).sum::<f64>())
                .fold(0.0, f64::max),
            Constraint::All(parts) => {
                let mut lambda: f64 = 0.0;
                for p in parts {
                    lambda = lambda.max(p.scale_of(y)?);
                }
                lambda
            }
        })
    }

    /// A random point of `b·P` with its tightest constraint (nearly) tight:
    /// uniform weights on elements feasible as singletons, rescaled and
    /// capped at 1.
    pub fn random_point<R: Rng + ?Sized>(&self, b: f64, rng: &mut R) -> Result<FractionalPoint> {
        if !(0.0..=1.0).contains(&b) {
            return Err(invalid(format!("b = {b} must lie in [0,1]")));
        }
        let y: Vec<f64> = (0..self.ground_size())
            .map(|e| {
                let u = rng.gen_range(0.05..1.0);
                if self.contains(ElementSet::singleton(e)) {
                    u
                } else {
                    0.0
                }
            })
            .collect();
        let lambda = self.scale_of(&y)?;
        if lambda == 0.0 {
            return Ok(FractionalPoint::zeros(y.len()).with_validated_scale(b));
        }
        let factor = b / lambda * (1.0 - 1e-12);
        Ok(FractionalPoint::clamped(y.iter().map(|v| (v * factor).min(1.0)).collect()).with_validated_scale(b))
    }

    pub fn summary(&self) -> ConstraintSummary {
        match self {
            Constraint::Matroid(m) => ConstraintSummary::Matroid { n: m.ground_size() },
            Constraint::Knapsack(s) => ConstraintSummary::Knapsack { sizes: s.to_vec() },
            Constraint::Matching(g) => ConstraintSummary::Matching {
                vertices: g.vertices(),
                edges: g.edges().iter().map(|&(u, v)| [u, v]).collect(),
            },
            Constraint::All(parts) => ConstraintSummary::All {
                parts: parts.iter().map(|p| p.summary()).collect(),
            },
        }
    }
}

/// The laminar matroid `{T : |{e ∈ T : d_e ≤ d}| ≤ d for every d}` of sets
/// that can be probed in deadline order. Repeated sets keep the smallest
/// capacity; vacuous constraints are dropped.
pub fn deadline_matroid(deadlines: &[usize]) -> Result<Matroid> {
    let n = deadlines.len();
    if let Some(e) = deadlines.iter().position(|&d| d == 0 || d > n) {
        return Err(invalid(format!(
            "deadlines[{e}] = {} must lie in 1..={n}",
            deadlines[e]
        )));
    }
    let mut sets: Vec<Vec<usize>> = Vec::new();
    let mut caps: Vec<usize> = Vec::new();
    for d in 1..=n {
        let set: Vec<usize> = (0..n).filter(|&e| deadlines[e] <= d).collect();
        if set.len() <= d || sets.last() == Some(&set) {
            continue;
        }
        sets.push(set);
        caps.push(d);
    }
    Matroid::laminar(n, &sets, &caps)
}

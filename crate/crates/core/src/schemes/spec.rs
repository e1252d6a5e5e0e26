use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::chain::{matroid_chain_decompose, ChainConfig, ChainDecomposition, DynMatroid};
use super::family::{FeasibleFamily, Graph, GraphDescriptor, KnapsackMode};
use crate::base::{tags, ElementSet, FractionalPoint, SeedSpec, FEAS_TOL};
use crate::error::{invalid, Error, Result};
use crate::matroids::{Matroid, MatroidDescriptor};

/// Cap on the number of family outcomes [`PreparedScheme::enumerate`] lists.
pub const MAX_ENUMERATED_OUTCOMES: usize = 1 << 16;

/// A claimed selectability constant. `slack` is the construction error the
/// harness adds before declaring a violation (nonzero only when span
/// probabilities were estimated by sampling).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bound {
    pub value: f64,
    pub slack: f64,
    pub expression: String,
}

/// `Pr[g ∈ K] = (1 - e^{-x}) / x`, with the limit 1 at `x = 0`.
pub fn matching_k_probability(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// `p_big = (1 - 2b + 2·b_big) / (2 - 2b)`.
pub fn knapsack_p_big(b: f64, b_big: f64) -> f64 {
    ((1.0 - 2.0 * b + 2.0 * b_big) / (2.0 - 2.0 * b)).clamp(0.0, 1.0)
}

/// JSON scheme descriptor. Constraints left out (`matroid`, `graph`) are
/// taken from the instance the scheme is applied to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase", deny_unknown_fields)]
pub enum SchemeDescriptor {
    Matroid {
        b: f64,
        #[serde(default = "default_eps")]
        eps: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matroid: Option<MatroidDescriptor>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        monte_carlo: bool,
    },
    Matching {
        b: f64,
        #[serde(default)]
        deterministic: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        graph: Option<GraphDescriptor>,
    },
    Knapsack {
        b: f64,
        sizes: Vec<f64>,
    },
    Intersect {
        parts: Vec<SchemeDescriptor>,
    },
}

fn default_eps() -> f64 {
    0.05
}

/// Constraints supplied by an instance file for descriptors that omit them.
#[derive(Clone, Default)]
pub struct SchemeContext {
    pub matroid: Option<Arc<DynMatroid>>,
    pub graph: Option<Arc<Graph>>,
}

/// A constraint together with the scale `b` of the scheme built for it.
#[derive(Clone)]
pub enum SchemeSpec {
    Matroid {
        matroid: Arc<DynMatroid>,
        config: ChainConfig,
    },
    Matching {
        graph: Arc<Graph>,
        b: f64,
        deterministic: bool,
    },
    Knapsack {
        sizes: Arc<[f64]>,
        b: f64,
    },
    Intersect(Vec<SchemeSpec>),
}

impl std::fmt::Debug for SchemeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SchemeSpec::Matroid { matroid, config } => f
                .debug_struct("Matroid")
                .field("n", &matroid.ground_size())
                .field("config", config)
                .finish(),
            SchemeSpec::Matching {
                graph,
                b,
                deterministic,
            } => f
                .debug_struct("Matching")
                .field("graph", graph)
                .field("b", b)
                .field("deterministic", deterministic)
                .finish(),
            SchemeSpec::Knapsack { sizes, b } => {
                f.debug_struct("Knapsack").field("sizes", sizes).field("b", b).finish()
            }
            SchemeSpec::Intersect(parts) => f.debug_tuple("Intersect").field(parts).finish(),
        }
    }
}

impl SchemeSpec {
    pub fn matroid(m: impl crate::matroids::MatroidOracle + 'static, b: f64) -> Self {
        SchemeSpec::Matroid {
            matroid: Arc::new(m),
            config: ChainConfig::new(b),
        }
    }

    pub fn matroid_with(m: Arc<DynMatroid>, config: ChainConfig) -> Self {
        SchemeSpec::Matroid { matroid: m, config }
    }

    pub fn matching(graph: Graph, b: f64, deterministic: bool) -> Self {
        SchemeSpec::Matching {
            graph: Arc::new(graph),
            b,
            deterministic,
        }
    }

    pub fn knapsack(sizes: Vec<f64>, b: f64) -> Self {
        SchemeSpec::Knapsack {
            sizes: Arc::from(sizes),
            b,
        }
    }

    /// Intersection of schemes sharing the ground set and the scale `b`.
    pub fn intersect(parts: Vec<SchemeSpec>) -> Result<Self> {
        let Some(first) = parts.first() else {
            return Err(invalid("intersect.parts: at least one part is required"));
        };
        let (n, b) = (first.ground_size(), first.b());
        for p in &parts[1..] {
            if p.ground_size() != n {
                return Err(Error::GroundMismatch {
                    expected: n,
                    got: p.ground_size(),
                });
            }
            if (p.b() - b).abs() > 1e-12 {
                return Err(invalid(format!(
                    "intersect.parts: all parts must share b, got {b} and {}",
                    p.b()
                )));
            }
        }
        Ok(SchemeSpec::Intersect(parts))
    }

    pub fn from_descriptor(d: &SchemeDescriptor, ctx: &SchemeContext) -> Result<Self> {
        match d {
            SchemeDescriptor::Matroid {
                b,
                eps,
                matroid,
                monte_carlo,
            } => {
                let m: Arc<DynMatroid> = match matroid {
                    Some(md) => Arc::new(Matroid::from_descriptor(md)?),
                    None => ctx
                        .matroid
                        .clone()
                        .ok_or_else(|| invalid("scheme.matroid: no matroid given by the scheme or the instance"))?,
                };
                let mut config = ChainConfig::new(*b).with_eps(*eps);
                config.force_monte_carlo = *monte_carlo;
                Ok(SchemeSpec::Matroid { matroid: m, config })
            }
            SchemeDescriptor::Matching {
                b,
                deterministic,
                graph,
            } => {
                let graph = match graph {
                    Some(g) => Arc::new(Graph::from_descriptor(g)?),
                    None => ctx
                        .graph
                        .clone()
                        .ok_or_else(|| invalid("scheme.graph: no graph given by the scheme or the instance"))?,
                };
                Ok(SchemeSpec::Matching {
                    graph,
                    b: *b,
                    deterministic: *deterministic,
                })
            }
            SchemeDescriptor::Knapsack { b, sizes } => Ok(SchemeSpec::knapsack(sizes.clone(), *b)),
            SchemeDescriptor::Intersect { parts } => SchemeSpec::intersect(
                parts
                    .iter()
                    .map(|p| SchemeSpec::from_descriptor(p, ctx))
                    .collect::<Result<_>>()?,
            ),
        }
    }

    pub fn from_json(text: &str, ctx: &SchemeContext) -> Result<Self> {
        let d: SchemeDescriptor = serde_json::from_str(text).map_err(|e| invalid(format!("scheme descriptor: {e}")))?;
        Self::from_descriptor(&d, ctx)
    }

    pub fn ground_size(&self) -> usize {
        match self {
            SchemeSpec::Matroid { matroid, .. } => matroid.ground_size(),
            SchemeSpec::Matching { graph, .. } => graph.edge_count(),
            SchemeSpec::Knapsack { sizes, .. } => sizes.len(),
            SchemeSpec::Intersect(parts) => parts[0].ground_size(),
        }
    }

    pub fn b(&self) -> f64 {
        match self {
            SchemeSpec::Matroid { config, .. } => config.b,
            SchemeSpec::Matching { b, .. } | SchemeSpec::Knapsack { b, .. } => *b,
            SchemeSpec::Intersect(parts) => parts[0].b(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            SchemeSpec::Matroid { .. } => "matroid".into(),
            SchemeSpec::Matching {
                deterministic: true, ..
            } => "matching-deterministic".into(),
            SchemeSpec::Matching { .. } => "matching".into(),
            SchemeSpec::Knapsack { .. } => "knapsack".into(),
            SchemeSpec::Intersect(parts) => format!(
                "intersect({})",
                parts.iter().map(|p| p.name()).collect::<Vec<_>>().join(",")
            ),
        }
    }

    /// Whether the prepared scheme draws the same family on every trial.
    pub fn is_deterministic(&self) -> bool {
        match self {
            SchemeSpec::Matroid { .. } => true,
            SchemeSpec::Matching { deterministic, .. } => *deterministic,
            SchemeSpec::Knapsack { .. } => false,
            SchemeSpec::Intersect(parts) => parts.iter().all(|p| p.is_deterministic()),
        }
    }

    /// Claimed selectability constant before any construction slack.
    pub fn claimed_bound(&self) -> Bound {
        let b = self.b();
        match self {
            SchemeSpec::Matroid { .. } => Bound {
                value: 1.0 - b,
                slack: 0.0,
                expression: "1-b".into(),
            },
            SchemeSpec::Matching {
                deterministic: true, ..
            } => Bound {
                value: (1.0 - b).powi(2),
                slack: 0.0,
                expression: "(1-b)^2".into(),
            },
            SchemeSpec::Matching { .. } => Bound {
                value: (-2.0 * b).exp(),
                slack: 0.0,
                expression: "e^{-2b}".into(),
            },
            SchemeSpec::Knapsack { .. } => Bound {
                value: ((1.0 - 2.0 * b) / (2.0 - 2.0 * b)).max(0.0),
                slack: 0.0,
                expression: "(1-2b)/(2-2b)".into(),
            },
            SchemeSpec::Intersect(parts) => product_bound(parts.iter().map(|p| p.claimed_bound())),
        }
    }

    /// Validates `x ∈ b·P` for the constraint and performs any construction
    /// (chain decompositions draw from `seed.child(CONSTRUCTION)`).
    pub fn prepare(&self, x: &FractionalPoint, seed: &SeedSpec) -> Result<PreparedScheme> {
        self.prepare_part(x, seed, 0)
    }

    fn prepare_part(&self, x: &FractionalPoint, seed: &SeedSpec, part: u64) -> Result<PreparedScheme> {
        let n = self.ground_size();
        if x.len() != n {
            return Err(Error::GroundMismatch {
                expected: n,
                got: x.len(),
            });
        }
        match self {
            SchemeSpec::Matroid { matroid, config } => {
                let mut rng = seed.child(tags::CONSTRUCTION).stream(part);
                let chain = matroid_chain_decompose(matroid.clone(), x, config, &mut rng)?;
                Ok(PreparedScheme::Matroid(Arc::new(chain)))
            }
            SchemeSpec::Matching {
                graph,
                b,
                deterministic,
            } => {
                if !(0.0..=1.0).contains(b) {
                    return Err(invalid(format!("b = {b} must lie in [0,1]")));
                }
                for v in 0..graph.vertices() {
                    let load = x.sum_over(graph.incident(v));
                    if load > b + FEAS_TOL {
                        return Err(Error::OutsidePolytope(format!(
                            "edges at vertex {v} carry {load} > b = {b}"
                        )));
                    }
                }
                let k_prob = if *deterministic {
                    vec![1.0; n]
                } else {
                    x.values().iter().map(|&v| matching_k_probability(v)).collect()
                };
                Ok(PreparedScheme::Matching {
                    graph: graph.clone(),
                    k_prob,
                    bound: self.claimed_bound(),
                })
            }
            SchemeSpec::Knapsack { sizes, b } => {
                if !(0.0..=0.5).contains(b) {
                    return Err(invalid(format!("knapsack b = {b} must lie in [0, 1/2]")));
                }
                if let Some(s) = sizes.iter().find(|s| !(0.0..=1.0).contains(*s)) {
                    return Err(invalid(format!("knapsack.sizes: {s} is outside [0,1]")));
                }
                let load: f64 = sizes.iter().zip(x.values()).map(|(s, v)| s * v).sum();
                if load > b + FEAS_TOL {
                    return Err(Error::OutsidePolytope(format!("Σ s_e x_e = {load} > b = {b}")));
                }
                let big: ElementSet = (0..n).filter(|&e| sizes[e] > 0.5).collect();
                let b_big: f64 = big.iter().map(|e| sizes[e] * x.get(e)).sum();
                Ok(PreparedScheme::Knapsack {
                    sizes: sizes.clone(),
                    big,
                    p_big: knapsack_p_big(*b, b_big),
                    bound: self.claimed_bound(),
                })
            }
            SchemeSpec::Intersect(parts) => Ok(PreparedScheme::Intersect(
                parts
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p.prepare_part(x, seed, part * 16 + i as u64 + 1))
                    .collect::<Result<_>>()?,
            )),
        }
    }
}

fn product_bound(parts: impl Iterator<Item = Bound>) -> Bound {
    let parts: Vec<Bound> = parts.collect();
    let value: f64 = parts.iter().map(|p| p.value).product();
    let lower: f64 = parts.iter().map(|p| (p.value - p.slack).max(0.0)).product();
    Bound {
        value,
        slack: value - lower,
        expression: parts
            .iter()
            .map(|p| format!("({})", p.expression))
            .collect::<Vec<_>>()
            .join("*"),
    }
}

/// A scheme after validation against a fixed `x`; draws one family per trial.
#[derive(Clone, Debug)]
pub enum PreparedScheme {
    Matroid(Arc<ChainDecomposition>),
    Matching {
        graph: Arc<Graph>,
        k_prob: Vec<f64>,
        bound: Bound,
    },
    Knapsack {
        sizes: Arc<[f64]>,
        big: ElementSet,
        p_big: f64,
        bound: Bound,
    },
    Intersect(Vec<PreparedScheme>),
}

impl PreparedScheme {
    pub fn ground_size(&self) -> usize {
        match self {
            PreparedScheme::Matroid(c) => c.ground_size(),
            PreparedScheme::Matching { graph, .. } => graph.edge_count(),
            PreparedScheme::Knapsack { sizes, .. } => sizes.len(),
            PreparedScheme::Intersect(parts) => parts[0].ground_size(),
        }
    }

    /// Claimed constant, with slack `eps` for sampled chain constructions.
    pub fn bound(&self) -> Bound {
        match self {
            PreparedScheme::Matroid(c) => Bound {
                value: 1.0 - c.config().b,
                slack: if c.used_monte_carlo() { c.config().eps } else { 0.0 },
                expression: "1-b".into(),
            },
            PreparedScheme::Matching { bound, .. } | PreparedScheme::Knapsack { bound, .. } => bound.clone(),
            PreparedScheme::Intersect(parts) => product_bound(parts.iter().map(|p| p.bound())),
        }
    }

    /// Draws one family. Deterministic parts consume no randomness; the
    /// draws of an intersection are taken part by part in order.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FeasibleFamily {
        match self {
            PreparedScheme::Matroid(c) => FeasibleFamily::MatroidChain(c.clone()),
            PreparedScheme::Matching { graph, k_prob, .. } => {
                let k = (0..k_prob.len())
                    .filter(|&g| k_prob[g] >= 1.0 || rng.gen::<f64>() < k_prob[g])
                    .collect();
                FeasibleFamily::Matching {
                    graph: graph.clone(),
                    k,
                }
            }
            PreparedScheme::Knapsack { sizes, big, p_big, .. } => {
                let mode = if rng.gen::<f64>() < *p_big {
                    KnapsackMode::Big
                } else {
                    KnapsackMode::Small
                };
                FeasibleFamily::Knapsack {
                    sizes: sizes.clone(),
                    big: *big,
                    mode,
                }
            }
            PreparedScheme::Intersect(parts) => {
                FeasibleFamily::Intersection(parts.iter().map(|p| p.sample(rng)).collect())
            }
        }
    }

    /// Every family the scheme can draw, with its exact probability.
    pub fn enumerate(&self) -> Result<Vec<(f64, FeasibleFamily)>> {
        match self {
            PreparedScheme::Matroid(c) => Ok(vec![(1.0, FeasibleFamily::MatroidChain(c.clone()))]),
            PreparedScheme::Matching { graph, k_prob, .. } => {
                let sure: ElementSet = (0..k_prob.len()).filter(|&g| k_prob[g] >= 1.0).collect();
                let random: Vec<usize> = (0..k_prob.len()).filter(|&g| k_prob[g] < 1.0).collect();
                if 1usize
                    .checked_shl(random.len() as u32)
                    .is_none_or(|c| c > MAX_ENUMERATED_OUTCOMES)
                {
                    return Err(Error::NotEnumerable(format!(
                        "{} edges with random membership in K",
                        random.len()
                    )));
                }
                Ok(ElementSet::from_indices(random.iter().copied())
                    .subsets()
                    .map(|chosen| {
                        let p: f64 = random
                            .iter()
                            .map(|&g| if chosen.contains(g) { k_prob[g] } else { 1.0 - k_prob[g] })
                            .product();
                        (
                            p,
                            FeasibleFamily::Matching {
                                graph: graph.clone(),
                                k: sure | chosen,
                            },
                        )
                    })
                    .collect())
            }
            PreparedScheme::Knapsack { sizes, big, p_big, .. } => {
                Ok([(KnapsackMode::Big, *p_big), (KnapsackMode::Small, 1.0 - p_big)]
                    .into_iter()
                    .filter(|&(_, p)| p > 0.0)
                    .map(|(mode, p)| {
                        (
                            p,
                            FeasibleFamily::Knapsack {
                                sizes: sizes.clone(),
                                big: *big,
                                mode,
                            },
                        )
                    })
                    .collect())
            }
            PreparedScheme::Intersect(parts) => {
                let mut acc: Vec<(f64, Vec<FeasibleFamily>)> = vec![(1.0, Vec::new())];
                for part in parts {
                    let outcomes = part.enumerate()?;
                    if acc.len() * outcomes.len() > MAX_ENUMERATED_OUTCOMES {
                        return Err(Error::NotEnumerable("intersection has too many joint outcomes".into()));
                    }
                    acc = acc
                        .iter()
                        .flat_map(|(p, fams)| {
                            outcomes.iter().map(move |(q, f)| {
                                let mut next = fams.clone();
                                next.push(f.clone());
                                (p * q, next)
                            })
                        })
                        .collect();
                }
                Ok(acc
                    .into_iter()
                    .map(|(p, fams)| (p, FeasibleFamily::Intersection(fams)))
                    .collect())
            }
        }
    }
}

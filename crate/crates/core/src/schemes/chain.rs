use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::base::{ElementSet, FractionalPoint};
use crate::error::{invalid, Error, Result};
use crate::matroids::{find_violation_sampled, MatroidOracle, MatroidView, RankTable, EXHAUSTIVE_POLYTOPE_LIMIT};

pub type DynMatroid = dyn MatroidOracle;

/// Parameters of the chain construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainConfig {
    pub b: f64,
    /// Additive accuracy of Monte-Carlo span estimates.
    pub eps: f64,
    /// Confidence exponent: all estimates are accurate with probability
    /// at least `1 - n^(-alpha)`.
    pub alpha: f64,
    /// Levels whose free support is at most this size are computed exactly.
    pub exact_limit: usize,
    /// Multiplier `C` in `m = ceil(C·((3+alpha)·ln n + ln 2) / eps²)`.
    pub sample_constant: f64,
    pub force_monte_carlo: bool,
    /// Check `x ∈ b·P` before building (exhaustively for `n ≤ 24`, by
    /// sampled violation search above).
    pub verify_membership: bool,
}

impl ChainConfig {
    pub fn new(b: f64) -> Self {
        ChainConfig {
            b,
            eps: 0.05,
            alpha: 1.0,
            exact_limit: 20,
            sample_constant: 2.0,
            force_monte_carlo: false,
            verify_membership: true,
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    /// Samples per span estimate.
    ///
    /// Hoeffding gives `Pr[|p̂ - p| > eps/2] ≤ 2·exp(-m·eps²/2)`. With the
    /// default constant 2 this is at most `n^(-3-alpha)`, and a union bound
    /// over the at most `n³` estimates of one construction (n levels, n
    /// refinement rounds, n elements) leaves failure probability `n^(-alpha)`.
    pub fn samples(&self, n: usize) -> usize {
        let ln_n = (n.max(2) as f64).ln();
        let m = self.sample_constant * ((3.0 + self.alpha) * ln_n + 2f64.ln()) / (self.eps * self.eps);
        m.ceil() as usize
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.b) {
            return Err(invalid(format!("b = {} must lie in [0,1]", self.b)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(invalid(format!("eps = {} must lie in (0,1)", self.eps)));
        }
        if !(self.alpha > 0.0) || !(self.sample_constant > 0.0) {
            return Err(invalid("alpha and the sample constant must be positive"));
        }
        Ok(())
    }
}

/// How the span probabilities of a level were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EstimateMode {
    Exact,
    MonteCarlo { samples: usize },
}

/// One layer `N_i ∖ N_{i+1}` with its view `(M / N_{i+1}) | N_i`.
#[derive(Clone, Debug)]
pub struct ChainLayer {
    pub elements: ElementSet,
    pub view: MatroidView<DynMatroid>,
    pub mode: EstimateMode,
}

/// Nested levels `N = N_0 ⊋ N_1 ⊋ … ⊋ N_l = ∅` and their layer views.
#[derive(Clone, Debug)]
pub struct ChainDecomposition {
    n: usize,
    levels: Vec<ElementSet>,
    layers: Vec<ChainLayer>,
    layer_of: Vec<usize>,
    span_estimates: Vec<f64>,
    config: ChainConfig,
}

impl ChainDecomposition {
    pub fn ground_size(&self) -> usize {
        self.n
    }

    /// `N_0, …, N_l`, ending with the empty set.
    pub fn levels(&self) -> &[ElementSet] {
        &self.levels
    }

    pub fn layers(&self) -> &[ChainLayer] {
        &self.layers
    }

    pub fn layer_of(&self, e: usize) -> usize {
        self.layer_of[e]
    }

    /// Final span probability estimate of every element in its own layer.
    pub fn span_estimates(&self) -> &[f64] {
        &self.span_estimates
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn used_monte_carlo(&self) -> bool {
        self.layers
            .iter()
            .any(|l| matches!(l.mode, EstimateMode::MonteCarlo { .. }))
    }

    pub fn contains(&self, s: ElementSet) -> bool {
        self.layers.iter().all(|l| l.view.is_independent(s & l.elements))
    }

    /// `e ∉ span_i((active ∩ layer_i) ∖ {e})`.
    pub fn selectable(&self, active: ElementSet, e: usize) -> bool {
        let layer = &self.layers[self.layer_of[e]];
        let others = (active & layer.elements).without(e);
        !layer.view.spans(others, e)
    }
}

/// Builds the chain decomposition of `m` for `x ∈ b·P`.
///
/// Each level repeatedly moves into `S` every element whose probability of
/// being spanned by `(R(x) ∩ N_i) ∪ S` (without itself) exceeds `b`, until no
/// such element remains; `N_{i+1} = S`. Spanning probabilities only grow with
/// `S`, so adding all violators at once reaches the same fixed point as
/// adding them one at a time.
pub fn matroid_chain_decompose<R: Rng + ?Sized>(
    m: Arc<DynMatroid>,
    x: &FractionalPoint,
    config: &ChainConfig,
    rng: &mut R,
) -> Result<ChainDecomposition> {
    config.validate()?;
    let n = m.ground_size();
    if x.len() != n {
        return Err(Error::GroundMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if config.verify_membership {
        check_membership(m.as_ref(), x, config.b, rng)?;
    }

    let mut levels = vec![ElementSet::full(n)];
    let mut layers = Vec::new();
    let mut layer_of = vec![0; n];
    let mut span_estimates = vec![0.0; n];
    let mut current = ElementSet::full(n);
    while !current.is_empty() {
        let level = layers.len();
        if level >= n {
            return Err(Error::ChainRefinement {
                level,
                reason: format!("exceeded the hard cap of {n} levels"),
            });
        }
        let mut s = ElementSet::EMPTY;
        let (probs, mode) = loop {
            let (probs, mode) = span_probabilities(m.as_ref(), x, current, s, config, rng);
            let add: ElementSet = (current - s).iter().filter(|&e| probs[e] > config.b).collect();
            if add.is_empty() {
                break (probs, mode);
            }
            s = s | add;
            if s == current {
                if m.rank(current) == 0 {
                    // only loops remain; they form a final layer and are never selectable
                    s = ElementSet::EMPTY;
                    break (probs, mode);
                }
                return Err(Error::ChainRefinement {
                    level,
                    reason: format!(
                        "every element of {current} is spanned with probability above b = {}; \
                         x is likely outside b·P",
                        config.b
                    ),
                });
            }
        };
        assert!(s.is_subset(current) && s != current, "refinement must shrink the level");
        let elements = current - s;
        for e in elements {
            layer_of[e] = level;
            span_estimates[e] = probs[e];
        }
        let view = MatroidView::new(m.clone(), s, elements)?;
        log::debug!("chain level {level}: layer {elements}, next level {s}");
        layers.push(ChainLayer { elements, view, mode });
        levels.push(s);
        current = s;
    }
    Ok(ChainDecomposition {
        n,
        levels,
        layers,
        layer_of,
        span_estimates,
        config: config.clone(),
    })
}

fn check_membership<R: Rng + ?Sized>(m: &DynMatroid, x: &FractionalPoint, b: f64, rng: &mut R) -> Result<()> {
    let n = m.ground_size();
    if n <= EXHAUSTIVE_POLYTOPE_LIMIT {
        let table = RankTable::build(m)?;
        if !crate::matroids::in_scaled_polytope_with(&table, x.values(), b) {
            return Err(Error::OutsidePolytope(format!("x(S) > {b}·rank(S) for some S")));
        }
    } else if let Some(s) = find_violation_sampled(m, x, b, 1000, rng)? {
        return Err(Error::OutsidePolytope(format!(
            "x({s}) = {} > {b}·rank = {}",
            x.sum_over(s),
            b * m.rank(s) as f64
        )));
    }
    Ok(())
}

/// `Pr[e ∈ span((R(x) ∩ free) ∖ {e} ∪ s)]` for every `e ∈ free = level ∖ s`,
/// indexed by element. Entries outside `free` are zero.
fn span_probabilities<R: Rng + ?Sized>(
    m: &DynMatroid,
    x: &FractionalPoint,
    level: ElementSet,
    s: ElementSet,
    config: &ChainConfig,
    rng: &mut R,
) -> (Vec<f64>, EstimateMode) {
    let free = level - s;
    let support: Vec<usize> = free.iter().filter(|&e| x.get(e) > 0.0).collect();
    if !config.force_monte_carlo && support.len() <= config.exact_limit {
        (exact_span_probabilities(m, x, free, s, &support), EstimateMode::Exact)
    } else {
        let samples = config.samples(m.ground_size());
        (
            sampled_span_probabilities(m, x, free, s, samples, config.eps, rng),
            EstimateMode::MonteCarlo { samples },
        )
    }
}

fn exact_span_probabilities(
    m: &DynMatroid,
    x: &FractionalPoint,
    free: ElementSet,
    s: ElementSet,
    support: &[usize],
) -> Vec<f64> {
    let k = support.len();
    let size = 1usize << k;
    let base = m.basis_of(s);
    // greedy basis of T ∪ s for every T ⊆ support, by local bitmask
    let mut basis = vec![base; size];
    for t in 1..size {
        let top = usize::BITS as usize - 1 - t.leading_zeros() as usize;
        let prev = basis[t ^ (1 << top)];
        let cand = prev.with(support[top]);
        basis[t] = if m.is_independent(cand) { cand } else { prev };
    }
    let mut prob = vec![1.0f64; 1];
    for &e in support {
        let xe = x.get(e);
        let mut next = Vec::with_capacity(prob.len() * 2);
        next.extend(prob.iter().map(|p| p * (1.0 - xe)));
        next.extend(prob.iter().map(|p| p * xe));
        prob = next;
    }
    let mut out = vec![0.0; m.ground_size()];
    for e in free {
        let spans = |t: usize| !m.is_independent(basis[t].with(e));
        out[e] = match support.iter().position(|&g| g == e) {
            Some(j) => (0..size)
                .filter(|t| t & (1 << j) == 0)
                .filter(|&t| spans(t))
                .map(|t| prob[t] + prob[t | (1 << j)])
                .sum(),
            None => (0..size).filter(|&t| spans(t)).map(|t| prob[t]).sum(),
        };
    }
    out
}

/// Empirical frequencies shifted down by `eps/2`, so that with high
/// probability each estimate lies in `[p - eps, p]`.
fn sampled_span_probabilities<R: Rng + ?Sized>(
    m: &DynMatroid,
    x: &FractionalPoint,
    free: ElementSet,
    s: ElementSet,
    samples: usize,
    eps: f64,
    rng: &mut R,
) -> Vec<f64> {
    let n = m.ground_size();
    let base = m.basis_of(s);
    let mut counts = vec![0usize; n];
    for _ in 0..samples {
        let t: ElementSet = free.iter().filter(|&e| rng.gen::<f64>() < x.get(e)).collect();
        let basis = crate::matroids::extend_greedily(m, base, t);
        for e in free {
            let spanned = if !t.contains(e) {
                !m.is_independent(basis.with(e))
            } else if !basis.contains(e) {
                true
            } else {
                let without = crate::matroids::extend_greedily(m, base, t.without(e));
                !m.is_independent(without.with(e))
            };
            if spanned {
                counts[e] += 1;
            }
        }
    }
    counts.iter().map(|&c| c as f64 / samples as f64 - eps / 2.0).collect()
}

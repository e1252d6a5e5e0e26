use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Tolerance on `Σ probs = 1`.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// A finite-support distribution with ascending, distinct support values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionDescriptor", into = "DistributionDescriptor")]
pub struct DiscreteDistribution {
    support: Vec<f64>,
    probs: Vec<f64>,
}

/// JSON form `{"support": [...], "probs": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionDescriptor {
    pub support: Vec<f64>,
    pub probs: Vec<f64>,
}

impl TryFrom<DistributionDescriptor> for DiscreteDistribution {
    type Error = crate::Error;

    fn try_from(d: DistributionDescriptor) -> Result<Self> {
        DiscreteDistribution::new(d.support, d.probs)
    }
}

impl From<DiscreteDistribution> for DistributionDescriptor {
    fn from(d: DiscreteDistribution) -> Self {
        DistributionDescriptor {
            support: d.support,
            probs: d.probs,
        }
    }
}

impl DiscreteDistribution {
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(invalid("distribution.support: must not be empty"));
        }
        if support.len() != probs.len() {
            return Err(invalid(format!(
                "distribution.probs: expected {} entries, got {}",
                support.len(),
                probs.len()
            )));
        }
        if support.iter().any(|v| !v.is_finite()) {
            return Err(invalid("distribution.support: values must be finite"));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("distribution.support: values must be strictly ascending"));
        }
        if probs.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(invalid("distribution.probs: every probability must lie in (0,1]"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(invalid(format!("distribution.probs: sum to {total}, not 1")));
        }
        Ok(DiscreteDistribution { support, probs })
    }

    pub fn constant(v: f64) -> Self {
        DiscreteDistribution {
            support: vec![v],
            probs: vec![1.0],
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn is_nonnegative(&self) -> bool {
        self.support[0] >= 0.0
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.probs).map(|(v, p)| v * p).sum()
    }

    /// `F(α) = Pr[Z ≤ α]`.
    pub fn cdf(&self, alpha: f64) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .filter(|(v, _)| **v <= alpha)
            .map(|(_, p)| p)
            .sum::<f64>()
            .min(1.0)
    }

    pub fn prob_of(&self, v: f64) -> f64 {
        self.support.iter().position(|&s| s == v).map_or(0.0, |i| self.probs[i])
    }

    /// `q(p) = min{α : F(α) ≥ 1 - p}` over the support.
    pub fn threshold(&self, p: f64) -> f64 {
        let target = 1.0 - p.clamp(0.0, 1.0);
        let mut cum = 0.0;
        for (v, q) in self.support.iter().zip(&self.probs) {
            cum += q;
            if cum >= target - PROB_SUM_TOL {
                return *v;
            }
        }
        *self.support.last().expect("nonempty support")
    }

    /// Expected value on the top `p`-fraction of realizations:
    /// `g(p) = E[Z·1{Z > q}] + (p - (1 - F(q)))·q`.
    pub fn tail_value(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let q = self.threshold(p);
        let above: f64 = self
            .support
            .iter()
            .zip(&self.probs)
            .filter(|(v, _)| **v > q)
            .map(|(v, pr)| v * pr)
            .sum();
        let mass_above = 1.0 - self.cdf(q);
        above + (p - mass_above).max(0.0) * q
    }

    /// Samples by inverse transform from one uniform draw.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        let mut cum = 0.0;
        for (v, p) in self.support.iter().zip(&self.probs) {
            cum += p;
            if u < cum {
                return *v;
            }
        }
        *self.support.last().expect("nonempty support")
    }

    pub fn tail_function(&self) -> TailFunction {
        let mut breakpoints = vec![(0.0, 0.0)];
        let mut slopes = Vec::with_capacity(self.support.len());
        let (mut p, mut g) = (0.0, 0.0);
        for (v, q) in self.support.iter().zip(&self.probs).rev() {
            p += q;
            g += v * q;
            breakpoints.push((p.min(1.0), g));
            slopes.push(*v);
        }
        TailFunction { breakpoints, slopes }
    }
}

/// Piecewise-linear concave `g` as breakpoints `(p_k, g(p_k))`; piece `k`
/// joins breakpoints `k` and `k+1` with slope `slopes[k]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailFunction {
    pub breakpoints: Vec<(f64, f64)>,
    pub slopes: Vec<f64>,
}

impl TailFunction {
    pub fn widths(&self) -> Vec<f64> {
        self.breakpoints.windows(2).map(|w| w[1].0 - w[0].0).collect()
    }

    pub fn is_concave(&self) -> bool {
        self.slopes.windows(2).all(|w| w[0] > w[1])
    }
}

use rand::Rng;

use super::SubmodularFunction;
use crate::base::{sample_active_set, tags, ElementSet, FractionalPoint, SeedSpec};
use crate::error::{Error, Result};
use crate::harness::{run_trials, MeanAccumulator, MeanEstimate};

/// Largest ground set for the exact `2^n`-term multilinear sum.
pub const EXACT_MULTILINEAR_LIMIT: usize = 14;

/// How to evaluate `F(x) = E[f(R(x))]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Multilinear {
    Exact,
    Sampled { samples: u64, seed: u64 },
}

/// `f` on every subset of the ground set, indexed by bitmask.
#[derive(Clone, Debug)]
pub struct ValueTable {
    n: usize,
    values: Vec<f64>,
}

impl ValueTable {
    pub fn build(f: &SubmodularFunction) -> Result<Self> {
        let n = f.ground_size();
        if n > EXACT_MULTILINEAR_LIMIT {
            return Err(Error::TooLarge {
                what: "value table",
                limit: EXACT_MULTILINEAR_LIMIT,
                n,
            });
        }
        let values =
            ElementSet::full(n)
                .subsets()
                .map(|s| (s, f.value(s)))
                .fold(vec![0.0; 1 << n], |mut acc, (s, v)| {
                    acc[s.index()] = v;
                    acc
                });
        Ok(ValueTable { n, values })
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn value(&self, s: ElementSet) -> f64 {
        self.values[s.index()]
    }

    /// `Pr[R(x) = S]` for every `S`.
    fn distribution(&self, x: &FractionalPoint) -> Vec<f64> {
        let mut prob = vec![0.0; 1 << self.n];
        prob[0] = 1.0;
        for e in 0..self.n {
            let (lo, xe) = (1usize << e, x.get(e));
            for s in 0..lo {
                let q = prob[s];
                prob[s] = q * (1.0 - xe);
                prob[s | lo] = q * xe;
            }
        }
        prob
    }

    /// Exact `F(x)`.
    pub fn multilinear(&self, x: &FractionalPoint) -> f64 {
        self.distribution(x).iter().zip(&self.values).map(|(p, v)| p * v).sum()
    }

    /// Exact `∂F/∂x_e = E[f(R(x) + e) − f(R(x) − e)]` for every `e`.
    pub fn gradient(&self, x: &FractionalPoint) -> Vec<f64> {
        let prob = self.distribution(x);
        (0..self.n)
            .map(|e| {
                let bit = 1usize << e;
                prob.iter()
                    .enumerate()
                    .map(|(s, p)| p * (self.values[s | bit] - self.values[s & !bit]))
                    .sum::<f64>()
            })
            .collect()
    }
}

fn check_len(f: &SubmodularFunction, x: &FractionalPoint) -> Result<()> {
    if x.len() != f.ground_size() {
        return Err(Error::GroundMismatch {
            expected: f.ground_size(),
            got: x.len(),
        });
    }
    Ok(())
}

/// The multilinear extension at `x`. Exact mode reports a zero half-width.
pub fn multilinear_f(f: &SubmodularFunction, x: &FractionalPoint, eval: Multilinear) -> Result<MeanEstimate> {
    check_len(f, x)?;
    match eval {
        Multilinear::Exact => {
            let table = ValueTable::build(f)?;
            Ok(MeanEstimate {
                mean: table.multilinear(x),
                ci_halfwidth: 0.0,
                samples: 0,
            })
        }
        Multilinear::Sampled { samples, seed } => {
            let stream = SeedSpec::new(seed).child(tags::POINT);
            let acc = run_trials(
                samples,
                None,
                MeanAccumulator::default,
                |acc, t| acc.push(f.value(sample_active_set(x, &mut stream.stream(t)))),
                |a, b| a.merge(b),
            );
            Ok(acc.estimate())
        }
    }
}

/// Sampled gradient with `samples` draws of `R(x)` per coordinate.
pub(crate) fn sampled_gradient<R: Rng + ?Sized>(
    f: &SubmodularFunction,
    x: &FractionalPoint,
    samples: u64,
    rng: &mut R,
) -> Vec<f64> {
    (0..f.ground_size())
        .map(|e| {
            let total: f64 = (0..samples)
                .map(|_| {
                    let r = sample_active_set(x, rng);
                    f.value(r.with(e)) - f.value(r.without(e))
                })
                .sum();
            total / samples.max(1) as f64
        })
        .collect()
}

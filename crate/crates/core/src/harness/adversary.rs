use rayon::prelude::*;
use serde::Serialize;

use super::{with_workers, MeanAccumulator, MeanEstimate};
use crate::base::ElementSet;
use crate::schemes::{run_greedy_ocrs, selectable_set, FeasibleFamily};

/// Largest `n` searched over all `n!` orders.
pub const EXHAUSTIVE_ORDER_LIMIT: usize = 8;

/// One fixed draw of all randomness: the active set, the sampled family and
/// the value each element contributes when selected. Reused across orders.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub active: ElementSet,
    pub family: FeasibleFamily,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    Exhaustive,
    GreedyHeuristic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdversarySearchResult {
    pub worst_order: Vec<usize>,
    pub worst_value: MeanEstimate,
    pub identity_value: MeanEstimate,
    pub mode: SearchMode,
    pub orders_evaluated: usize,
    /// Scenario/order pairs where an element selectable against the active
    /// set was not picked by the greedy run. Always zero for a greedy OCRS.
    pub containment_violations: u64,
}

struct Prepared<'a> {
    scenarios: &'a [Scenario],
    selectable: Vec<ElementSet>,
}

impl Prepared<'_> {
    fn evaluate(&self, order: &[usize]) -> (MeanEstimate, u64) {
        let mut acc = MeanAccumulator::default();
        let mut violations = 0;
        for (s, sel) in self.scenarios.iter().zip(&self.selectable) {
            let chosen = run_greedy_ocrs(&s.family, order, s.active);
            if !sel.is_subset(chosen) {
                violations += 1;
            }
            acc.push(chosen.iter().map(|e| s.values[e]).sum());
        }
        (acc.estimate(), violations)
    }
}

/// Mean value of the greedy OCRS under `order` across the scenarios.
pub fn order_value(scenarios: &[Scenario], order: &[usize]) -> MeanEstimate {
    let p = Prepared {
        scenarios,
        selectable: scenarios.iter().map(|s| selectable_set(&s.family, s.active)).collect(),
    };
    p.evaluate(order).0
}

/// Order minimizing the mean value over common scenarios: all `n!` orders for
/// `n ≤ 8`, pairwise-swap local search from the identity above that. Ties go
/// to the lexicographically smallest order.
pub fn worst_order_value(n: usize, scenarios: &[Scenario], workers: Option<usize>) -> AdversarySearchResult {
    let prepared = Prepared {
        scenarios,
        selectable: scenarios.iter().map(|s| selectable_set(&s.family, s.active)).collect(),
    };
    let identity: Vec<usize> = (0..n).collect();
    let (identity_value, mut violations) = prepared.evaluate(&identity);
    if n <= EXHAUSTIVE_ORDER_LIMIT {
        let orders = all_permutations(n);
        let values: Vec<(MeanEstimate, u64)> =
            with_workers(workers, || orders.par_iter().map(|o| prepared.evaluate(o)).collect());
        violations += values.iter().map(|v| v.1).sum::<u64>();
        let (best, _) =
            values.iter().enumerate().fold(
                (0, f64::INFINITY),
                |(bi, bv), (i, v)| {
                    if v.0.mean < bv {
                        (i, v.0.mean)
                    } else {
                        (bi, bv)
                    }
                },
            );
        return AdversarySearchResult {
            worst_order: orders[best].clone(),
            worst_value: values[best].0,
            identity_value,
            mode: SearchMode::Exhaustive,
            orders_evaluated: orders.len(),
            containment_violations: violations,
        };
    }
    let mut current = identity;
    let mut current_value = identity_value;
    let mut evaluated = 1;
    for _ in 0..n * n {
        let swaps: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let results: Vec<(Vec<usize>, (MeanEstimate, u64))> = with_workers(workers, || {
            swaps
                .par_iter()
                .map(|&(i, j)| {
                    let mut o = current.clone();
                    o.swap(i, j);
                    let v = prepared.evaluate(&o);
                    (o, v)
                })
                .collect()
        });
        evaluated += results.len();
        violations += results.iter().map(|r| r.1 .1).sum::<u64>();
        let best = results.into_iter().filter(|r| r.1 .0.mean < current_value.mean).fold(
            None::<(Vec<usize>, MeanEstimate)>,
            |acc, (o, (v, _))| match acc {
                Some((_, bv)) if bv.mean <= v.mean => acc,
                _ => Some((o, v)),
            },
        );
        match best {
            Some((o, v)) => {
                current = o;
                current_value = v;
            }
            None => break,
        }
    }
    AdversarySearchResult {
        worst_order: current,
        worst_value: current_value,
        identity_value,
        mode: SearchMode::GreedyHeuristic,
        orders_evaluated: evaluated,
        containment_violations: violations,
    }
}

/// All permutations of `0..n` in lexicographic order.
pub(crate) fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut out = vec![p.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).expect("pivot has a successor");
        p.swap(i - 1, j);
        p[i..].reverse();
        out.push(p.clone());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::FractionalPoint;
    use crate::schemes::{matroid_chain_decompose, ChainConfig, DynMatroid};
    use std::sync::Arc;

    #[test]
    fn permutations_are_lexicographic_and_complete() {
        let p = all_permutations(4);
        assert_eq!(p.len(), 24);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(all_permutations(1), vec![vec![0]]);
    }

    #[test]
    fn heavy_element_last_is_worst() {
        let m: Arc<DynMatroid> = Arc::new(crate::matroids::Matroid::uniform(2, 1).unwrap());
        let x = FractionalPoint::new(vec![0.25, 0.25]).unwrap();
        let mut rng = crate::base::SeedSpec::new(0).stream(0);
        let chain = Arc::new(matroid_chain_decompose(m, &x, &ChainConfig::new(0.5), &mut rng).unwrap());
        let scenarios: Vec<Scenario> = ElementSet::full(2)
            .subsets()
            .map(|active| Scenario {
                active,
                family: FeasibleFamily::MatroidChain(chain.clone()),
                values: vec![1.0, 100.0],
            })
            .collect();
        let r = worst_order_value(2, &scenarios, None);
        assert_eq!(r.worst_order, vec![0, 1]);
        assert_eq!(r.mode, SearchMode::Exhaustive);
        assert_eq!(r.containment_violations, 0);
        assert!(r.worst_value.mean < order_value(&scenarios, &[1, 0]).mean);
    }
}

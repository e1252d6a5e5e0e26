use rand::Rng;

use super::MatroidOracle;
use crate::base::{ElementSet, FractionalPoint, FEAS_TOL};
use crate::error::{invalid, Error, Result};

/// Largest ground set for which exhaustive (all `2^n` subsets) polytope
/// checks are supported.
pub const EXHAUSTIVE_POLYTOPE_LIMIT: usize = 24;

/// Rank of every subset of a small ground set, indexed by subset.
///
/// Built with one independence query per subset: the greedy basis of `S` is
/// the greedy basis of `S` minus its largest element, extended by that
/// element when it stays independent.
#[derive(Clone, Debug)]
pub struct RankTable {
    n: usize,
    ranks: Vec<u8>,
}

impl RankTable {
    pub fn build<M: MatroidOracle + ?Sized>(m: &M) -> Result<Self> {
        let n = m.ground_size();
        if n > EXHAUSTIVE_POLYTOPE_LIMIT {
            return Err(Error::TooLarge {
                what: "exhaustive rank table",
                limit: EXHAUSTIVE_POLYTOPE_LIMIT,
                n,
            });
        }
        let size = 1usize << n;
        let mut basis = vec![0u32; size];
        let mut ranks = vec![0u8; size];
        for s in 1..size {
            let top = usize::BITS - 1 - s.leading_zeros();
            let prev = s ^ (1 << top);
            let b = basis[prev];
            let cand = b | (1 << top);
            if m.is_independent(ElementSet::from_bits(cand as u64)) {
                basis[s] = cand;
                ranks[s] = ranks[prev] + 1;
            } else {
                basis[s] = b;
                ranks[s] = ranks[prev];
            }
        }
        Ok(RankTable { n, ranks })
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn rank(&self, s: ElementSet) -> usize {
        self.ranks[s.index()] as usize
    }

    pub(crate) fn ranks(&self) -> &[u8] {
        &self.ranks
    }
}

/// Subset sums of `values` over every subset, computed as the sum of a
/// low-half table and a high-half table to keep memory at `O(2^(n/2))`.
struct HalfSums {
    low_bits: usize,
    low: Vec<f64>,
    high: Vec<f64>,
}

impl HalfSums {
    fn new(values: &[f64]) -> Self {
        let n = values.len();
        let low_bits = n / 2;
        let table = |vals: &[f64]| {
            let mut t = vec![0.0; 1 << vals.len()];
            for s in 1..t.len() {
                let low = s.trailing_zeros() as usize;
                t[s] = t[s & (s - 1)] + vals[low];
            }
            t
        };
        HalfSums {
            low_bits,
            low: table(&values[..low_bits]),
            high: table(&values[low_bits..]),
        }
    }

    fn sum(&self, s: usize) -> f64 {
        self.low[s & ((1 << self.low_bits) - 1)] + self.high[s >> self.low_bits]
    }
}

fn check_len<M: MatroidOracle + ?Sized>(m: &M, x: &[f64]) -> Result<()> {
    if x.len() != m.ground_size() {
        return Err(Error::GroundMismatch {
            expected: m.ground_size(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Whether `x(S) ≤ b·rank(S)` for every `S ⊆ N`, up to an absolute tolerance
/// of `1e-9`. Exhaustive; only for `n ≤ 24`. Larger instances must use
/// [`find_violation_sampled`], which can only certify violations.
pub fn in_scaled_matroid_polytope<M: MatroidOracle + ?Sized>(m: &M, x: &FractionalPoint, b: f64) -> Result<bool> {
    check_len(m, x.values())?;
    let table = RankTable::build(m)?;
    Ok(in_scaled_polytope_with(&table, x.values(), b))
}

pub(crate) fn in_scaled_polytope_with(table: &RankTable, x: &[f64], b: f64) -> bool {
    let sums = HalfSums::new(x);
    table
        .ranks()
        .iter()
        .enumerate()
        .all(|(s, &r)| sums.sum(s) <= b * r as f64 + FEAS_TOL)
}

/// Smallest `λ` with `y ∈ λ·P`, i.e. `max_S y(S) / rank(S)`. Infinite when a
/// rank-zero set carries positive mass.
pub fn max_polytope_scale<M: MatroidOracle + ?Sized>(m: &M, y: &[f64]) -> Result<f64> {
    check_len(m, y)?;
    let table = RankTable::build(m)?;
    let sums = HalfSums::new(y);
    let mut lambda: f64 = 0.0;
    for (s, &r) in table.ranks().iter().enumerate() {
        let mass = sums.sum(s);
        if r == 0 {
            if mass > 0.0 {
                return Ok(f64::INFINITY);
            }
        } else {
            lambda = lambda.max(mass / r as f64);
        }
    }
    Ok(lambda)
}

/// A random point on the boundary of `b·P`: uniform weights on non-loops,
/// rescaled so that the tightest rank constraint holds with equality.
pub fn random_point_in_scaled_polytope<M: MatroidOracle + ?Sized, R: Rng + ?Sized>(
    m: &M,
    b: f64,
    rng: &mut R,
) -> Result<FractionalPoint> {
    if !(0.0..=1.0).contains(&b) {
        return Err(invalid(format!("b = {b} must lie in [0,1]")));
    }
    let n = m.ground_size();
    let y: Vec<f64> = (0..n)
        .map(|e| {
            let u = rng.gen_range(0.05..1.0);
            if m.is_independent(ElementSet::singleton(e)) {
                u
            } else {
                0.0
            }
        })
        .collect();
    let lambda = max_polytope_scale(m, &y)?;
    if lambda == 0.0 {
        return Ok(FractionalPoint::zeros(n).with_validated_scale(b));
    }
    // shave a relative 1e-12 so the tight constraint survives rounding
    let factor = b / lambda * (1.0 - 1e-12);
    Ok(FractionalPoint::clamped(y.iter().map(|v| v * factor).collect()).with_validated_scale(b))
}

/// Looks for a set `S` with `x(S) > b·rank(S)` among random subsets and
/// prefixes of the coordinates sorted by decreasing value. Returns `None` if
/// no violation was found, which does not certify membership.
pub fn find_violation_sampled<M: MatroidOracle + ?Sized, R: Rng + ?Sized>(
    m: &M,
    x: &FractionalPoint,
    b: f64,
    samples: usize,
    rng: &mut R,
) -> Result<Option<ElementSet>> {
    check_len(m, x.values())?;
    let n = m.ground_size();
    let violated = |s: ElementSet| x.sum_over(s) > b * m.rank(s) as f64 + FEAS_TOL;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| x.get(c).total_cmp(&x.get(a)).then(a.cmp(&c)));
    let mut prefix = ElementSet::EMPTY;
    for &e in &order {
        prefix.insert(e);
        if violated(prefix) {
            return Ok(Some(prefix));
        }
    }
    for _ in 0..samples {
        let density = rng.gen::<f64>();
        let s: ElementSet = (0..n).filter(|_| rng.gen::<f64>() < density).collect();
        if violated(s) {
            return Ok(Some(s));
        }
        // closing a violated-looking set under span only raises x(S)
        let closed = m.span(s);
        if violated(closed) {
            return Ok(Some(closed));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::SeedSpec;
    use crate::matroids::Matroid;

    #[test]
    fn rank_table_matches_oracle() {
        let m = Matroid::complete_graph(4).unwrap();
        let t = RankTable::build(&m).unwrap();
        for s in ElementSet::full(6).subsets() {
            assert_eq!(t.rank(s), m.rank(s));
        }
    }

    #[test]
    fn membership_examples() {
        let k4 = Matroid::complete_graph(4).unwrap();
        assert!(in_scaled_matroid_polytope(&k4, &FractionalPoint::zeros(6), 0.0).unwrap());
        let u21 = Matroid::uniform(2, 1).unwrap();
        let x = FractionalPoint::new(vec![0.6, 0.6]).unwrap();
        assert!(!in_scaled_matroid_polytope(&u21, &x, 1.0).unwrap());
        let third = FractionalPoint::new(vec![1.0 / 3.0; 6]).unwrap();
        assert!(in_scaled_matroid_polytope(&k4, &third, 1.0).unwrap());
        // a triangle carries 1 > b * 2 for b = 0.4
        assert!(!in_scaled_matroid_polytope(&k4, &third, 0.4).unwrap());
    }

    #[test]
    fn membership_matches_direct_enumeration() {
        let m = Matroid::laminar(5, &[vec![0, 1, 2], vec![0, 1]], &[2, 1]).unwrap();
        let mut rng = SeedSpec::new(3).stream(0);
        for _ in 0..50 {
            let x = FractionalPoint::new((0..5).map(|_| rng.gen::<f64>()).collect()).unwrap();
            let b = rng.gen::<f64>();
            let direct = ElementSet::full(5)
                .subsets()
                .all(|s| x.sum_over(s) <= b * m.rank(s) as f64 + 1e-9);
            assert_eq!(in_scaled_matroid_polytope(&m, &x, b).unwrap(), direct);
        }
    }

    #[test]
    fn random_points_are_tight_members() {
        let m = Matroid::complete_graph(4).unwrap();
        let mut rng = SeedSpec::new(5).stream(0);
        for &b in &[0.25, 0.5, 0.75] {
            let x = random_point_in_scaled_polytope(&m, b, &mut rng).unwrap();
            assert!(in_scaled_matroid_polytope(&m, &x, b).unwrap());
            let lambda = max_polytope_scale(&m, x.values()).unwrap();
            assert!((lambda - b).abs() < 1e-9);
        }
    }

    #[test]
    fn sampled_check_finds_obvious_violation() {
        let m = Matroid::uniform(30, 2).unwrap();
        let x = FractionalPoint::new(vec![0.2; 30]).unwrap();
        let mut rng = SeedSpec::new(1).stream(0);
        assert!(find_violation_sampled(&m, &x, 1.0, 10, &mut rng).unwrap().is_some());
        let ok = FractionalPoint::new(vec![0.05; 30]).unwrap();
        assert!(find_violation_sampled(&m, &ok, 1.0, 50, &mut rng).unwrap().is_none());
        assert!(in_scaled_matroid_polytope(&m, &ok, 1.0).is_err());
    }
}

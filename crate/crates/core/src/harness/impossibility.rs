use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::base::ElementSet;
use crate::error::{invalid, Error, Result};

/// Largest `n` for the family enumeration, which is doubly exponential.
pub const IMPOSSIBILITY_LIMIT: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct ImpossibilityResult {
    pub n: usize,
    pub b: BigRational,
    /// Best min-over-elements selectability over all candidate families.
    pub value: BigRational,
    /// Members of a family attaining `value`.
    pub witness: Vec<ElementSet>,
    pub families_checked: usize,
}

/// Parses `"3/8"`, `"0.25"` or `"1"` as an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let bad = || invalid(format!("cannot parse {text:?} as an exact rational"));
    if let Some((num, den)) = t.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    let (int_part, frac_part) = t.split_once('.').unwrap_or((t, ""));
    if frac_part.chars().any(|c| !c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = digits.parse().map_err(|_| bad())?;
    let den = num_traits::pow(BigInt::from(10), frac_part.len());
    Ok(BigRational::new(num, den))
}

/// Instance with `n - 1` items of size `1/n`, one item of size 1, and
/// `x = (b, …, b, b/n)`. Enumerates every down-closed subfamily of the
/// knapsack-feasible sets that contains all singletons and returns the best
/// worst-element selectability any of them achieves.
pub fn knapsack_deterministic_impossibility(n: usize, b: &BigRational) -> Result<ImpossibilityResult> {
    if n < 2 {
        return Err(invalid(format!("impossibility instance needs n ≥ 2, got {n}")));
    }
    if n > IMPOSSIBILITY_LIMIT {
        return Err(Error::TooLarge {
            what: "deterministic knapsack impossibility",
            limit: IMPOSSIBILITY_LIMIT,
            n,
        });
    }
    let one = BigRational::one();
    if *b < BigRational::zero() || *b > one {
        return Err(invalid(format!("b = {b} must lie in [0,1]")));
    }
    let nn = BigRational::from_integer(BigInt::from(n));
    let sizes: Vec<BigRational> = (0..n)
        .map(|e| {
            if e + 1 < n {
                one.clone() / nn.clone()
            } else {
                one.clone()
            }
        })
        .collect();
    let x: Vec<BigRational> = (0..n)
        .map(|e| if e + 1 < n { b.clone() } else { b.clone() / nn.clone() })
        .collect();

    let full = ElementSet::full(n);
    let feasible: Vec<ElementSet> = full
        .subsets()
        .filter(|s| s.iter().map(|e| sizes[e].clone()).sum::<BigRational>() <= one)
        .collect();
    let (forced, free): (Vec<ElementSet>, Vec<ElementSet>) = feasible.iter().partition(|s| s.len() <= 1);

    let active_prob: Vec<(ElementSet, BigRational)> = full
        .subsets()
        .map(|a| {
            let p = (0..n)
                .map(|e| if a.contains(e) { x[e].clone() } else { &one - &x[e] })
                .fold(one.clone(), |acc, v| acc * v);
            (a, p)
        })
        .collect();

    let mut best: Option<(BigRational, Vec<ElementSet>)> = None;
    let mut checked = 0;
    for choice in 0u64..(1 << free.len()) {
        let members: Vec<ElementSet> = forced
            .iter()
            .copied()
            .chain(
                free.iter()
                    .enumerate()
                    .filter(|(i, _)| choice >> i & 1 == 1)
                    .map(|(_, &s)| s),
            )
            .collect();
        let contains = |s: ElementSet| members.contains(&s);
        let down_closed = members.iter().all(|&s| s.iter().all(|e| contains(s.without(e))));
        if !down_closed {
            continue;
        }
        checked += 1;
        let worst = (0..n)
            .map(|e| {
                active_prob
                    .iter()
                    .filter(|(a, _)| a.without(e).subsets().all(|i| !contains(i) || contains(i.with(e))))
                    .map(|(_, p)| p.clone())
                    .fold(BigRational::zero(), |acc, p| acc + p)
            })
            .min()
            .expect("n ≥ 2");
        if best.as_ref().is_none_or(|(v, _)| worst > *v) {
            best = Some((worst, members));
        }
    }
    let (value, witness) = best.ok_or_else(|| Error::Internal("no candidate family".into()))?;
    Ok(ImpossibilityResult {
        n,
        b: b.clone(),
        value,
        witness,
        families_checked: checked,
    })
}

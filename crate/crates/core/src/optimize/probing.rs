use std::collections::HashMap;

use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::Value;

use super::simplex::{rational_from_f64, rational_to_f64, simplex_solve, LinearProgram, LpSolution, Rational};
use crate::base::{ElementSet, FractionalPoint};
use crate::error::{invalid, Error, Result};
use crate::matroids::RankTable;
use crate::schemes::{deadline_matroid, Constraint};

/// Largest ground set for the probing LP, whose matroid rows range over all
/// `2^n` subsets.
pub const PROBING_LP_LIMIT: usize = 16;

/// Largest ground set for the exact adaptive optimum.
pub const ADAPTIVE_LIMIT: usize = 4;

/// Weighted stochastic probing: element `e` is active with probability
/// `p_e`; probed elements must form a set in `outer`, and the active probed
/// elements, which are all kept, a set in `inner`.
#[derive(Clone, Debug)]
pub struct ProbingInstance {
    pub p: Vec<f64>,
    pub w: Vec<f64>,
    pub inner: Constraint,
    pub outer: Constraint,
    /// `d_e ∈ 1..=n`: `e` may only be probed as one of the first `d_e` probes.
    pub deadlines: Option<Vec<usize>>,
    pub b: f64,
}

impl ProbingInstance {
    pub fn new(
        p: Vec<f64>,
        w: Vec<f64>,
        inner: Constraint,
        outer: Constraint,
        deadlines: Option<Vec<usize>>,
        b: f64,
    ) -> Result<Self> {
        let n = p.len();
        if n == 0 {
            return Err(invalid("p: at least one element is required"));
        }
        if w.len() != n {
            return Err(invalid(format!("w: expected {n} weights, got {}", w.len())));
        }
        if let Some(e) = p.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid(format!("p[{e}] = {} is not a probability", p[e])));
        }
        if let Some(e) = w.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid(format!("w[{e}] = {} must be a nonnegative number", w[e])));
        }
        for (name, c) in [("inner", &inner), ("outer", &outer)] {
            if c.ground_size() != n {
                return Err(invalid(format!(
                    "{name}: constraint has {} elements, expected {n}",
                    c.ground_size()
                )));
            }
        }
        if let Some(d) = &deadlines {
            if d.len() != n {
                return Err(invalid(format!("deadlines: expected {n} entries, got {}", d.len())));
            }
            deadline_matroid(d)?;
        }
        if !(b > 0.0 && b <= 1.0) {
            return Err(invalid(format!("b = {b} must lie in (0,1]")));
        }
        Ok(ProbingInstance {
            p,
            w,
            inner,
            outer,
            deadlines,
            b,
        })
    }

    /// `{"p":[…],"w":[…],"inner":…,"outer":…,"deadlines":[…],"b":0.5}`;
    /// `deadlines` is optional and `b` defaults to 1/2.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| invalid(format!("probing instance: {e}")))?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| invalid("probing instance: expected a JSON object"))?;
        for key in obj.keys() {
            if !["p", "w", "inner", "outer", "deadlines", "b"].contains(&key.as_str()) {
                return Err(invalid(format!("probing instance: unknown field {key:?}")));
            }
        }
        let get = |name: &str| obj.get(name).ok_or_else(|| invalid(format!("{name}: missing")));
        let floats = |name: &str| -> Result<Vec<f64>> {
            serde_json::from_value(get(name)?.clone()).map_err(|e| invalid(format!("{name}: {e}")))
        };
        let deadlines = match obj.get("deadlines") {
            None | Some(Value::Null) => None,
            Some(d) => Some(serde_json::from_value(d.clone()).map_err(|e| invalid(format!("deadlines: {e}")))?),
        };
        let b = match obj.get("b") {
            None => 0.5,
            Some(b) => b.as_f64().ok_or_else(|| invalid("b: expected a number"))?,
        };
        Self::new(
            floats("p")?,
            floats("w")?,
            Constraint::from_value(get("inner")?)?,
            Constraint::from_value(get("outer")?)?,
            deadlines,
            b,
        )
    }

    pub fn ground_size(&self) -> usize {
        self.p.len()
    }

    /// The outer constraint intersected with the deadline laminar matroid.
    pub fn effective_outer(&self) -> Result<Constraint> {
        match &self.deadlines {
            None => Ok(self.outer.clone()),
            Some(d) => Constraint::all(vec![self.outer.clone(), Constraint::matroid(deadline_matroid(d)?)]),
        }
    }

    /// Probe order by ascending deadline, ties by index; the identity
    /// without deadlines.
    pub fn deadline_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.ground_size()).collect();
        if let Some(d) = &self.deadlines {
            order.sort_by_key(|&e| (d[e], e));
        }
        order
    }
}

/// Optimal solution of the probing LP.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbingLpSolution {
    pub x: FractionalPoint,
    /// `w(p ∘ x)`.
    pub value: f64,
    #[serde(serialize_with = "serialize_rational")]
    pub exact_value: Rational,
    #[serde(skip)]
    pub exact_x: Vec<Rational>,
    /// The LP at termination, including every generated rank row.
    #[serde(skip)]
    pub program: LinearProgram,
    pub pivots: usize,
    pub rounds: usize,
}

fn serialize_rational<S: serde::Serializer>(v: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// Solves `max w(p ∘ x)` subject to `p ∘ x ∈ P_in`, `x ∈ P_out` and
/// `x ∈ [0,1]^N`, with the outer constraint intersected with the deadline
/// matroid when deadlines are present.
pub fn solve_probing_lp(instance: &ProbingInstance) -> Result<ProbingLpSolution> {
    let objective = instance
        .w
        .iter()
        .zip(&instance.p)
        .map(|(w, p)| Ok(rational_from_f64(*w)? * rational_from_f64(*p)?))
        .collect::<Result<Vec<_>>>()?;
    let region = ProbingRegion::new(&instance.p, &instance.inner, &instance.effective_outer()?)?;
    let mut sol = region.maximize(objective)?;
    sol.value = instance
        .w
        .iter()
        .zip(&instance.p)
        .zip(sol.x.values())
        .map(|((w, p), x)| w * p * x)
        .sum();
    Ok(sol)
}

/// `{x ∈ [0,1]^N : p ∘ x ∈ P_in, x ∈ P_out}` as rational rows. Matroid rank
/// rows are generated lazily by exhaustive separation.
pub struct ProbingRegion {
    n: usize,
    static_rows: Vec<(Vec<Rational>, Rational)>,
    matroids: Vec<(RankTable, Vec<Rational>)>,
}

impl ProbingRegion {
    pub fn new(p: &[f64], inner: &Constraint, outer: &Constraint) -> Result<Self> {
        let n = p.len();
        if n > PROBING_LP_LIMIT {
            return Err(Error::TooLarge {
                what: "probing LP",
                limit: PROBING_LP_LIMIT,
                n,
            });
        }
        let p_exact = p.iter().map(|&v| rational_from_f64(v)).collect::<Result<Vec<_>>>()?;
        let mut region = ProbingRegion {
            n,
            static_rows: Vec::new(),
            matroids: Vec::new(),
        };
        region.add_constraint(inner, &p_exact)?;
        region.add_constraint(outer, &vec![Rational::one(); n])?;
        Ok(region)
    }

    fn add_constraint(&mut self, c: &Constraint, coeffs: &[Rational]) -> Result<()> {
        match c {
            Constraint::Matroid(m) => self.matroids.push((RankTable::build(m.as_ref())?, coeffs.to_vec())),
            Constraint::Knapsack(sizes) => {
                let row = sizes
                    .iter()
                    .zip(coeffs)
                    .map(|(s, c)| Ok(rational_from_f64(*s)? * c))
                    .collect::<Result<Vec<_>>>()?;
                self.static_rows.push((row, Rational::one()));
            }
            Constraint::Matching(g) => {
                for v in 0..g.vertices() {
                    let inc = g.incident(v);
                    let row = (0..self.n)
                        .map(|e| {
                            if inc.contains(e) {
                                coeffs[e].clone()
                            } else {
                                Rational::zero()
                            }
                        })
                        .collect();
                    self.static_rows.push((row, Rational::one()));
                }
            }
            Constraint::All(parts) => {
                for part in parts {
                    self.add_constraint(part, coeffs)?;
                }
            }
        }
        Ok(())
    }

    /// Maximizes `objective · x` over the region.
    pub fn maximize(&self, objective: Vec<Rational>) -> Result<ProbingLpSolution> {
        if objective.len() != self.n {
            return Err(Error::GroundMismatch {
                expected: self.n,
                got: objective.len(),
            });
        }
        let mut lp = LinearProgram::new(objective);
        lp.upper = vec![Some(Rational::one()); self.n];
        for (row, rhs) in &self.static_rows {
            lp.add_row(row.clone(), rhs.clone());
        }
        let mut pivots = 0;
        let mut rounds = 0;
        loop {
            rounds += 1;
            let sol: LpSolution = simplex_solve(&lp).map_err(|e| match e {
                Error::Infeasible | Error::Unbounded => {
                    Error::Internal(format!("probing LP reported {e}, but x = 0 is feasible"))
                }
                other => other,
            })?;
            pivots += sol.pivots;
            let cuts = self.violated_rows(&sol.x);
            if cuts.is_empty() {
                let x = FractionalPoint::clamped(sol.x.iter().map(rational_to_f64).collect());
                return Ok(ProbingLpSolution {
                    value: rational_to_f64(&sol.value),
                    exact_value: sol.value,
                    exact_x: sol.x,
                    x,
                    program: lp,
                    pivots,
                    rounds,
                });
            }
            for (row, rhs) in cuts {
                lp.add_row(row, rhs);
            }
        }
    }

    /// Up to `n` most violated rank rows per matroid, checked exactly.
    fn violated_rows(&self, x: &[Rational]) -> Vec<(Vec<Rational>, Rational)> {
        let n = self.n;
        let mut out = Vec::new();
        for (table, coeffs) in &self.matroids {
            let weighted: Vec<Rational> = x.iter().zip(coeffs).map(|(v, c)| v * c).collect();
            let mut sums = vec![Rational::zero(); 1 << n];
            let mut violated: Vec<(Rational, usize)> = Vec::new();
            for s in 1..sums.len() {
                let low = s.trailing_zeros() as usize;
                sums[s] = &sums[s & (s - 1)] + &weighted[low];
                let r = Rational::from_integer(table.rank(ElementSet::from_bits(s as u64)).into());
                if sums[s] > r {
                    violated.push((&sums[s] - r, s));
                }
            }
            violated.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            for &(_, s) in violated.iter().take(n.max(1)) {
                let set = ElementSet::from_bits(s as u64);
                let row = (0..n)
                    .map(|e| {
                        if set.contains(e) {
                            coeffs[e].clone()
                        } else {
                            Rational::zero()
                        }
                    })
                    .collect();
                out.push((row, Rational::from_integer(table.rank(set).into())));
            }
        }
        out
    }
}

/// Best expected weight of any adaptive probing strategy, by backward
/// induction over (probed, selected) states with exact rationals. The
/// strategy chooses the next probe freely among elements `e` with
/// `Q + e ∈ F_out`, `S + e ∈ F_in` and, with deadlines, `|Q| < d_e`.
pub fn adaptive_optimum(instance: &ProbingInstance) -> Result<Rational> {
    let n = instance.ground_size();
    if n > ADAPTIVE_LIMIT {
        return Err(Error::TooLarge {
            what: "adaptive optimum",
            limit: ADAPTIVE_LIMIT,
            n,
        });
    }
    let p = instance
        .p
        .iter()
        .map(|&v| rational_from_f64(v))
        .collect::<Result<Vec<_>>>()?;
    let w = instance
        .w
        .iter()
        .map(|&v| rational_from_f64(v))
        .collect::<Result<Vec<_>>>()?;
    let mut memo = HashMap::new();
    Ok(adaptive_value(
        instance,
        &p,
        &w,
        ElementSet::EMPTY,
        ElementSet::EMPTY,
        &mut memo,
    ))
}

fn adaptive_value(
    inst: &ProbingInstance,
    p: &[Rational],
    w: &[Rational],
    probed: ElementSet,
    selected: ElementSet,
    memo: &mut HashMap<(ElementSet, ElementSet), Rational>,
) -> Rational {
    if let Some(v) = memo.get(&(probed, selected)) {
        return v.clone();
    }
    let n = inst.ground_size();
    let mut best = Rational::zero();
    for e in (ElementSet::full(n) - probed).iter() {
        if let Some(d) = &inst.deadlines {
            if probed.len() >= d[e] {
                continue;
            }
        }
        if !inst.outer.contains(probed.with(e)) || !inst.inner.contains(selected.with(e)) {
            continue;
        }
        let q = probed.with(e);
        let hit = &w[e] + adaptive_value(inst, p, w, q, selected.with(e), memo);
        let miss = adaptive_value(inst, p, w, q, selected, memo);
        let v = &p[e] * hit + (Rational::one() - &p[e]) * miss;
        if v > best {
            best = v;
        }
    }
    memo.insert((probed, selected), best.clone());
    best
}

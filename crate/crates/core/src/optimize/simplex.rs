use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{invalid, Error, Result};

pub type Rational = BigRational;

/// `max c·x` subject to `rows[i]·x ≤ rhs[i]`, `0 ≤ x_j ≤ upper[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub rows: Vec<Vec<Rational>>,
    pub rhs: Vec<Rational>,
    pub upper: Vec<Option<Rational>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<Rational>,
    pub value: Rational,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(objective: Vec<Rational>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            rows: Vec::new(),
            rhs: Vec::new(),
            upper: vec![None; n],
        }
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, row: Vec<Rational>, rhs: Rational) {
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    fn validate(&self) -> Result<()> {
        let n = self.vars();
        if self.rows.len() != self.rhs.len() || self.upper.len() != n {
            return Err(invalid("linear program: inconsistent dimensions"));
        }
        if let Some(i) = self.rows.iter().position(|r| r.len() != n) {
            return Err(invalid(format!("linear program: row {i} has the wrong length")));
        }
        Ok(())
    }

    /// Plain-text dump: the objective, then one line per constraint, then
    /// the bounds.
    pub fn to_text(&self) -> String {
        let term = |c: &Rational, j: usize| format!("{c} x{j}");
        let lin = |coeffs: &[Rational]| {
            let parts: Vec<String> = coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(j, c)| term(c, j))
                .collect();
            if parts.is_empty() {
                "0".to_string()
            } else {
                parts.join(" + ")
            }
        };
        let mut out = String::new();
        let _ = writeln!(out, "max: {}", lin(&self.objective));
        for (i, (row, rhs)) in self.rows.iter().zip(&self.rhs).enumerate() {
            let _ = writeln!(out, "r{i}: {} <= {rhs}", lin(row));
        }
        for (j, u) in self.upper.iter().enumerate() {
            match u {
                Some(u) => {
                    let _ = writeln!(out, "bound: 0 <= x{j} <= {u}");
                }
                None => {
                    let _ = writeln!(out, "bound: 0 <= x{j}");
                }
            }
        }
        out
    }
}

struct Tableau {
    /// Constraint rows; the last column is the right-hand side.
    t: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    /// Reduced-cost row for maximization; the last entry is `-value`.
    z: Vec<Rational>,
    cols: usize,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c].clone();
        for v in self.t[r].iter_mut() {
            *v = &*v / &p;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= &f * pv;
                }
            }
        }
        if !self.z[c].is_zero() {
            let f = self.z[c].clone();
            for (v, pv) in self.z.iter_mut().zip(&prow) {
                *v -= &f * pv;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Bland's rule: lowest-index improving column, ties in the ratio test
    /// to the lowest-index basic variable.
    fn optimize(&mut self, allowed: usize) -> Result<()> {
        loop {
            let Some(c) = (0..allowed).find(|&j| self.z[j].is_negative()) else {
                return Ok(());
            };
            let mut best: Option<(usize, Rational)> = None;
            for (i, row) in self.t.iter().enumerate() {
                if row[c].is_positive() {
                    let ratio = &row[self.cols] / &row[c];
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = best else {
                return Err(Error::Unbounded);
            };
            self.pivot(r, c);
        }
    }

    fn set_objective(&mut self, costs: &[Rational]) {
        self.z = vec![Rational::zero(); self.cols + 1];
        for (j, c) in costs.iter().enumerate() {
            self.z[j] = -c.clone();
        }
        for i in 0..self.t.len() {
            let b = self.basis[i];
            if !self.z[b].is_zero() {
                let f = self.z[b].clone();
                for (v, pv) in self.z.iter_mut().zip(&self.t[i]) {
                    *v -= &f * pv;
                }
            }
        }
    }
}

/// Exact two-phase primal simplex with Bland's rule.
pub fn simplex_solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.vars();
    let mut rows: Vec<(Vec<Rational>, Rational)> = lp.rows.iter().cloned().zip(lp.rhs.iter().cloned()).collect();
    for (j, u) in lp.upper.iter().enumerate() {
        if let Some(u) = u {
            let mut r = vec![Rational::zero(); n];
            r[j] = Rational::one();
            rows.push((r, u.clone()));
        }
    }
    let m = rows.len();
    let negative: Vec<usize> = (0..m).filter(|&i| rows[i].1.is_negative()).collect();
    let art = negative.len();
    let cols = n + m + art;
    let mut t = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for (i, (coeffs, rhs)) in rows.into_iter().enumerate() {
        let mut row = vec![Rational::zero(); cols + 1];
        let sign = if rhs.is_negative() {
            -Rational::one()
        } else {
            Rational::one()
        };
        for (j, c) in coeffs.into_iter().enumerate() {
            row[j] = &sign * c;
        }
        row[n + i] = sign.clone();
        row[cols] = &sign * rhs;
        if let Some(k) = negative.iter().position(|&r| r == i) {
            row[n + m + k] = Rational::one();
            basis.push(n + m + k);
        } else {
            basis.push(n + i);
        }
        t.push(row);
    }
    let mut tab = Tableau {
        t,
        basis,
        z: Vec::new(),
        cols,
        pivots: 0,
    };

    if art > 0 {
        let mut costs = vec![Rational::zero(); cols];
        for c in costs.iter_mut().skip(n + m) {
            *c = -Rational::one();
        }
        tab.set_objective(&costs);
        tab.optimize(cols)?;
        if !tab.z[cols].is_zero() {
            return Err(Error::Infeasible);
        }
        // drive zero-valued artificials out of the basis, dropping redundant rows
        let mut i = 0;
        while i < tab.t.len() {
            if tab.basis[i] >= n + m {
                match (0..n + m).find(|&j| !tab.t[i][j].is_zero()) {
                    Some(c) => tab.pivot(i, c),
                    None => {
                        tab.t.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        for row in tab.t.iter_mut() {
            for v in row[n + m..cols].iter_mut() {
                *v = Rational::zero();
            }
        }
    }
    tab.set_objective(&lp.objective);
    tab.optimize(n + m)?;

    let mut x = vec![Rational::zero(); n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.t[i][cols].clone();
        }
    }
    let value = lp
        .objective
        .iter()
        .zip(&x)
        .fold(Rational::zero(), |acc, (c, v)| acc + c * v);
    Ok(LpSolution {
        x,
        value,
        pivots: tab.pivots,
    })
}

/// The shortest decimal that round-trips to `v`, as an exact rational, so
/// `0.1` becomes `1/10` rather than its binary expansion.
pub fn rational_from_f64(v: f64) -> Result<Rational> {
    if !v.is_finite() {
        return Err(invalid(format!("{v} is not a finite number")));
    }
    crate::harness::parse_rational(&format!("{v}"))
}

pub fn rational_to_f64(v: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    v.to_f64().unwrap_or(f64::NAN)
}

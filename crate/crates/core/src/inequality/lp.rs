//! Exact two-phase revised simplex over sparse rational columns.
//!
//! Solves `min c·x` subject to `A x = b`, `x ≥ 0`. Pivoting uses the most
//! negative reduced cost until a long degenerate run, then Bland's rule
//! (smallest improving column, smallest basic index among tied ratios),
//! so it terminates without cycling. On infeasibility the
//! Phase I duals are returned as a Farkas certificate `y` with
//! `yᵀA ≤ 0` and `yᵀb > 0`.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("pivot limit {0} reached")]
    PivotLimit(usize),
    #[error("objective is unbounded below")]
    Unbounded,
    #[error("column {col} refers to row {row}, but there are only {rows} rows")]
    Shape { col: usize, row: usize, rows: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal {
        x: Vec<Rational>,
        value: Rational,
    },
    /// `y` with `yᵀA ≤ 0` componentwise and `yᵀb > 0`.
    Infeasible {
        farkas: Vec<Rational>,
    },
}

/// A sparse column: `(row, value)` pairs with distinct rows.
pub type Column = Vec<(usize, Rational)>;

/// Standard-form problem `min c·x, A x = b, x ≥ 0`, stored by column.
#[derive(Clone, Debug, Default)]
pub struct StandardLp {
    pub rows: usize,
    pub cols: Vec<Column>,
    pub b: Vec<Rational>,
    pub c: Vec<Rational>,
}

impl StandardLp {
    pub fn new(rows: usize) -> StandardLp {
        StandardLp {
            rows,
            cols: Vec::new(),
            b: vec![Rational::zero(); rows],
            c: Vec::new(),
        }
    }

    /// Append a column with cost `cost`; zero entries are dropped.
    pub fn push_column(&mut self, col: Column, cost: Rational) -> usize {
        self.cols
            .push(col.into_iter().filter(|(_, v)| !v.is_zero()).collect());
        self.c.push(cost);
        self.cols.len() - 1
    }

    /// Build from a dense row-major matrix.
    pub fn from_dense(a: &[Vec<Rational>], b: Vec<Rational>, c: Vec<Rational>) -> StandardLp {
        let mut lp = StandardLp::new(a.len());
        lp.b = b;
        for (j, cj) in c.into_iter().enumerate() {
            let col = a
                .iter()
                .enumerate()
                .map(|(i, row)| (i, row[j].clone()))
                .collect();
            lp.push_column(col, cj);
        }
        lp
    }
}

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_RUN: usize = 50;

struct Revised<'a> {
    cols: &'a [Column],
    m: usize,
    /// Row-major inverse of the basis matrix.
    binv: Vec<Vec<Rational>>,
    xb: Vec<Rational>,
    basis: Vec<usize>,
    pivots: usize,
    limit: usize,
}

impl Revised<'_> {
    /// Column `j` of the extended matrix: structural, or the unit column of
    /// artificial `j - n`.
    fn column(&self, j: usize) -> Column {
        if j < self.cols.len() {
            self.cols[j].clone()
        } else {
            vec![(j - self.cols.len(), Rational::one())]
        }
    }

    fn ftran(&self, col: &Column) -> Vec<Rational> {
        let mut d = vec![Rational::zero(); self.m];
        for (i, row) in self.binv.iter().enumerate() {
            let mut s = Rational::zero();
            for (k, v) in col {
                let b = &row[*k];
                if !b.is_zero() {
                    s += b * v;
                }
            }
            d[i] = s;
        }
        d
    }

    fn duals(&self, cost: &dyn Fn(usize) -> Rational) -> Vec<Rational> {
        let mut y = vec![Rational::zero(); self.m];
        for (i, &bj) in self.basis.iter().enumerate() {
            let cb = cost(bj);
            if cb.is_zero() {
                continue;
            }
            for (k, v) in self.binv[i].iter().enumerate() {
                if !v.is_zero() {
                    y[k] += &cb * v;
                }
            }
        }
        y
    }

    fn pivot(&mut self, r: usize, j: usize, d: &[Rational]) -> Result<(), LpError> {
        self.pivots += 1;
        if self.pivots > self.limit {
            return Err(LpError::PivotLimit(self.limit));
        }
        let inv = d[r].recip();
        for v in self.binv[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        self.xb[r] *= &inv;
        let nz: Vec<usize> = (0..self.m)
            .filter(|&k| !self.binv[r][k].is_zero())
            .collect();
        let prow = std::mem::take(&mut self.binv[r]);
        let px = self.xb[r].clone();
        for i in 0..self.m {
            if i == r || d[i].is_zero() {
                continue;
            }
            let f = &d[i];
            for &k in &nz {
                let delta = f * &prow[k];
                self.binv[i][k] -= delta;
            }
            let delta = f * &px;
            self.xb[i] -= delta;
        }
        self.binv[r] = prow;
        self.basis[r] = j;
        Ok(())
    }

    /// Dantzig pricing, falling back to Bland's rule for good once a run of
    /// degenerate pivots suggests stalling.
    fn optimize(&mut self, cost: &dyn Fn(usize) -> Rational) -> Result<(), LpError> {
        let mut bland = false;
        let mut degenerate = 0usize;
        loop {
            let y = self.duals(cost);
            let reduced = |j: usize| -> Rational {
                let ya: Rational = self.cols[j].iter().map(|(k, v)| &y[*k] * v).sum();
                cost(j) - ya
            };
            let entering = if bland {
                (0..self.cols.len()).find(|&j| reduced(j).is_negative())
            } else {
                let mut best: Option<(usize, Rational)> = None;
                for j in 0..self.cols.len() {
                    let rc = reduced(j);
                    if rc.is_negative() && best.as_ref().is_none_or(|(_, b)| rc < *b) {
                        best = Some((j, rc));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(j) = entering else {
                return Ok(());
            };
            let d = self.ftran(&self.cols[j]);
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.m {
                if !d[i].is_positive() {
                    continue;
                }
                let ratio = &self.xb[i] / &d[i];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => {
                        ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            let Some((r, ratio)) = best else {
                return Err(LpError::Unbounded);
            };
            if ratio.is_zero() {
                degenerate += 1;
                bland |= degenerate > DEGENERATE_RUN;
            } else {
                degenerate = 0;
            }
            self.pivot(r, j, &d)?;
        }
    }
}

fn check_shape(lp: &StandardLp) -> Result<(), LpError> {
    for (j, col) in lp.cols.iter().enumerate() {
        if let Some(&(row, _)) = col.iter().find(|(r, _)| *r >= lp.rows) {
            return Err(LpError::Shape {
                col: j,
                row,
                rows: lp.rows,
            });
        }
    }
    Ok(())
}

fn dot(y: &[Rational], col: &Column) -> Rational {
    col.iter().map(|(k, v)| &y[*k] * v).sum()
}

/// What a floating-point solve suggests about a feasibility problem.
enum Guess {
    /// Support of an approximately feasible basic point.
    Feasible(Vec<usize>),
    /// An approximate Farkas vertex: the columns tight at it and the
    /// coordinates at their box bounds.
    Ray {
        tight: Vec<usize>,
        bounds: Vec<(usize, f64)>,
    },
}

const FLOAT_EPS: f64 = 1e-7;

fn float_guess(lp: &StandardLp) -> Option<Guess> {
    use microlp::{ComparisonOp, Error, OptimizationDirection, Problem};
    let f = |v: &Rational| v.to_f64().unwrap_or(0.0);
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let xs: Vec<_> = lp
        .cols
        .iter()
        .map(|_| p.add_var(0.0, (0.0, f64::INFINITY)))
        .collect();
    let mut rows: Vec<Vec<(microlp::Variable, f64)>> = vec![Vec::new(); lp.rows];
    for (j, col) in lp.cols.iter().enumerate() {
        for (i, v) in col {
            rows[*i].push((xs[j], f(v)));
        }
    }
    for (i, row) in rows.iter().enumerate() {
        p.add_constraint(row.as_slice(), ComparisonOp::Eq, f(&lp.b[i]));
    }
    match p.solve() {
        Ok(out) => {
            let sol = out.into_solution().ok()?;
            Some(Guess::Feasible(
                (0..xs.len())
                    .filter(|&j| sol.var_value(xs[j]) > FLOAT_EPS)
                    .collect(),
            ))
        }
        Err(Error::Infeasible) => {
            // max y·b over the unit box with yᵀA ≤ 0
            let mut q = Problem::new(OptimizationDirection::Maximize);
            let ys: Vec<_> = lp.b.iter().map(|v| q.add_var(f(v), (-1.0, 1.0))).collect();
            for col in &lp.cols {
                let e: Vec<_> = col.iter().map(|(i, v)| (ys[*i], f(v))).collect();
                q.add_constraint(e.as_slice(), ComparisonOp::Le, 0.0);
            }
            let sol = q.solve().ok()?.into_solution().ok()?;
            let y: Vec<f64> = ys.iter().map(|&v| sol.var_value(v)).collect();
            let tight = lp
                .cols
                .iter()
                .enumerate()
                .filter(|(_, col)| col.iter().map(|(i, v)| y[*i] * f(v)).sum::<f64>() > -FLOAT_EPS)
                .map(|(j, _)| j)
                .collect();
            let bounds = y
                .iter()
                .enumerate()
                .filter(|(_, v)| v.abs() > 1.0 - FLOAT_EPS)
                .map(|(i, v)| (i, v.signum()))
                .collect();
            Some(Guess::Ray { tight, bounds })
        }
        Err(_) => None,
    }
}

/// Some exact solution of the sparse system `M z = r` (free unknowns set to
/// zero), or `None` when it is inconsistent. Gauss-Jordan with a sparsest
/// row / sparsest column pivot choice.
fn solve_system(
    mut eqs: Vec<BTreeMap<usize, Rational>>,
    mut rhs: Vec<Rational>,
    nvars: usize,
) -> Option<Vec<Rational>> {
    let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nvars];
    for (i, e) in eqs.iter().enumerate() {
        for &k in e.keys() {
            col_rows[k].insert(i);
        }
    }
    let mut done = vec![false; eqs.len()];
    let mut pivots = Vec::new();
    while let Some(r) = (0..eqs.len())
        .filter(|&i| !done[i] && !eqs[i].is_empty())
        .min_by_key(|&i| eqs[i].len())
    {
        done[r] = true;
        let c = *eqs[r].keys().min_by_key(|&&k| col_rows[k].len()).unwrap();
        let prow = eqs[r].clone();
        let pb = rhs[r].clone();
        let others: Vec<usize> = col_rows[c].iter().copied().filter(|&i| i != r).collect();
        for i in others {
            let f = &eqs[i][&c] / &prow[&c];
            for (k, v) in &prow {
                let e = eqs[i].entry(*k).or_insert_with(Rational::zero);
                *e -= &f * v;
                if e.is_zero() {
                    eqs[i].remove(k);
                    col_rows[*k].remove(&i);
                } else {
                    col_rows[*k].insert(i);
                }
            }
            rhs[i] -= &f * &pb;
        }
        pivots.push((r, c));
    }
    if (0..eqs.len()).any(|i| eqs[i].is_empty() && !rhs[i].is_zero()) {
        return None;
    }
    let mut z = vec![Rational::zero(); nvars];
    for (r, c) in pivots {
        z[c] = &rhs[r] / &eqs[r][&c];
    }
    Some(z)
}

/// Exact point supported on `support`, if one exists and is nonnegative.
fn exact_point(lp: &StandardLp, support: &[usize]) -> Option<Vec<Rational>> {
    let mut eqs = vec![BTreeMap::new(); lp.rows];
    for (k, &j) in support.iter().enumerate() {
        for (i, v) in &lp.cols[j] {
            eqs[*i].insert(k, v.clone());
        }
    }
    let z = solve_system(eqs, lp.b.clone(), support.len())?;
    if z.iter().any(|v| v.is_negative()) {
        return None;
    }
    let mut x = vec![Rational::zero(); lp.cols.len()];
    for (k, v) in support.iter().zip(z) {
        x[*k] = v;
    }
    Some(x)
}

/// Exact Farkas vector orthogonal to `tight` with the given coordinates
/// pinned, if it separates every column.
fn exact_ray(lp: &StandardLp, tight: &[usize], bounds: &[(usize, f64)]) -> Option<Vec<Rational>> {
    let mut eqs = Vec::new();
    let mut rhs = Vec::new();
    for &j in tight {
        eqs.push(lp.cols[j].iter().cloned().collect::<BTreeMap<_, _>>());
        rhs.push(Rational::zero());
    }
    for &(i, sign) in bounds {
        eqs.push(BTreeMap::from([(i, Rational::one())]));
        rhs.push(if sign > 0.0 {
            Rational::one()
        } else {
            -Rational::one()
        });
    }
    let y = solve_system(eqs, rhs, lp.rows)?;
    let separates =
        dot_dense(&y, &lp.b).is_positive() && lp.cols.iter().all(|c| !dot(&y, c).is_positive());
    separates.then_some(y)
}

fn dot_dense(y: &[Rational], b: &[Rational]) -> Rational {
    y.iter().zip(b).map(|(a, b)| a * b).sum()
}

/// Exact feasibility, fast path first. A float solve suggests a support
/// (or a Farkas vertex), which is rebuilt exactly by elimination and checked
/// against every column. If that fails, delayed column generation: solve
/// over a column subset, and while the restriction is infeasible add every
/// column its Farkas vector fails to separate. A feasible restriction is
/// feasible for the whole problem; a Farkas vector separating all columns
/// certifies the whole problem infeasible. Problems with a nonzero
/// objective go straight to [`solve`].
pub fn solve_guided(lp: &StandardLp, pivot_limit: usize) -> Result<LpOutcome, LpError> {
    check_shape(lp)?;
    if lp.c.iter().any(|c| !c.is_zero()) {
        return solve(lp, pivot_limit);
    }
    let n = lp.cols.len();
    let mut active = vec![false; n];
    match float_guess(lp) {
        Some(Guess::Feasible(support)) => {
            if let Some(x) = exact_point(lp, &support) {
                return Ok(LpOutcome::Optimal {
                    x,
                    value: Rational::zero(),
                });
            }
            support.into_iter().for_each(|j| active[j] = true);
        }
        Some(Guess::Ray { tight, bounds }) => {
            if let Some(farkas) = exact_ray(lp, &tight, &bounds) {
                return Ok(LpOutcome::Infeasible { farkas });
            }
            tight.into_iter().for_each(|j| active[j] = true);
        }
        None => {}
    }
    loop {
        let idx: Vec<usize> = (0..n).filter(|&j| active[j]).collect();
        let sub = StandardLp {
            rows: lp.rows,
            cols: idx.iter().map(|&j| lp.cols[j].clone()).collect(),
            b: lp.b.clone(),
            c: vec![Rational::zero(); idx.len()],
        };
        match solve(&sub, pivot_limit)? {
            LpOutcome::Optimal { x: xs, value } => {
                let mut x = vec![Rational::zero(); n];
                for (k, v) in idx.into_iter().zip(xs) {
                    x[k] = v;
                }
                return Ok(LpOutcome::Optimal { x, value });
            }
            LpOutcome::Infeasible { farkas } => {
                let missed: Vec<usize> = (0..n)
                    .filter(|&j| !active[j] && dot(&farkas, &lp.cols[j]).is_positive())
                    .collect();
                if missed.is_empty() {
                    return Ok(LpOutcome::Infeasible { farkas });
                }
                for j in missed {
                    active[j] = true;
                }
            }
        }
    }
}

/// Solve with a pivot limit.
pub fn solve(lp: &StandardLp, pivot_limit: usize) -> Result<LpOutcome, LpError> {
    let m = lp.rows;
    let n = lp.cols.len();
    check_shape(lp)?;
    let flipped: Vec<bool> = lp.b.iter().map(|v| v.is_negative()).collect();
    let cols: Vec<Column> = lp
        .cols
        .iter()
        .map(|col| {
            col.iter()
                .map(|(i, v)| (*i, if flipped[*i] { -v.clone() } else { v.clone() }))
                .collect()
        })
        .collect();
    let mut binv = vec![vec![Rational::zero(); m]; m];
    for (i, row) in binv.iter_mut().enumerate() {
        row[i] = Rational::one();
    }
    let mut s = Revised {
        cols: &cols,
        m,
        binv,
        xb: lp.b.iter().map(|v| v.abs()).collect(),
        basis: (n..n + m).collect(),
        pivots: 0,
        limit: pivot_limit,
    };
    let phase1 = |j: usize| {
        if j >= n {
            Rational::one()
        } else {
            Rational::zero()
        }
    };
    s.optimize(&phase1)?;
    let infeasibility: Rational = s
        .basis
        .iter()
        .zip(&s.xb)
        .filter(|(&bj, _)| bj >= n)
        .map(|(_, x)| x.clone())
        .sum();
    if infeasibility.is_positive() {
        let y = s.duals(&phase1);
        let farkas = y
            .into_iter()
            .zip(&flipped)
            .map(|(v, &f)| if f { -v } else { v })
            .collect();
        return Ok(LpOutcome::Infeasible { farkas });
    }
    // pivot zero-valued artificials out where a structural column allows it
    for r in 0..m {
        if s.basis[r] < n {
            continue;
        }
        let found = (0..n).find(|&j| {
            !cols[j]
                .iter()
                .map(|(k, v)| &s.binv[r][*k] * v)
                .sum::<Rational>()
                .is_zero()
        });
        if let Some(j) = found {
            let d = s.ftran(&s.column(j));
            s.pivot(r, j, &d)?;
        }
    }
    let phase2 = |j: usize| {
        if j >= n {
            Rational::zero()
        } else {
            lp.c[j].clone()
        }
    };
    s.optimize(&phase2)?;
    let mut x = vec![Rational::zero(); n];
    for (r, &bj) in s.basis.iter().enumerate() {
        if bj < n {
            x[bj] = s.xb[r].clone();
        }
    }
    let value = x.iter().zip(&lp.c).map(|(a, b)| a * b).sum();
    Ok(LpOutcome::Optimal { x, value })
}

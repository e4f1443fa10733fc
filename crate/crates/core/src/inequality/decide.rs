//! Deciding `0 ≤ max_ℓ E_ℓ(h)` over a cone.
//!
//! The inequality holds on a polyhedral cone `K` iff some convex
//! combination `Σ λ_ℓ E_ℓ` lies in the dual cone `K*`. We solve that
//! feasibility problem directly, so a feasible point is the certificate
//! `(λ, μ)`. When it is infeasible, the Phase I Farkas vector is a point
//! `h ∈ K` with every `E_ℓ(h) ≤ −1` after scaling.
//!
//! - Polymatroid: `K*` is generated by the elemental inequalities, so the
//!   system is `Σ λ_ℓ E_ℓ − Σ μ_r e_r = 0` coefficientwise.
//! - Normal: `K` is generated by step functions, so the system is
//!   `Σ λ_ℓ E_ℓ(h_W) = μ_W ≥ 0` for each `W ⊊ V`.
//! - Modular: as normal, over `W = V ∖ {i}` only.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use super::lp::{solve, solve_guided, Column, LpError, LpOutcome, StandardLp};
use super::{elemental_inequalities, ConeId, LinearExpression, MaxInequality};
use crate::polymatroid::{is_modular, is_normal, is_polymatroid, SetFunction};
use crate::varset::VarSet;
use crate::Rational;

#[derive(Clone, Debug)]
pub struct DecideOptions {
    pub pivot_limit: usize,
    pub max_n_polymatroid: usize,
    pub max_n_normal: usize,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            pivot_limit: 1_000_000,
            max_n_polymatroid: 10,
            max_n_normal: 16,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecisionError {
    #[error("{cone} cone over {n} variables exceeds the cap of {cap}")]
    TooLarge { cone: ConeId, n: usize, cap: usize },
    #[error("inequality is not valid over the {0} cone")]
    NotValid(ConeId),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Multipliers proving validity. `lambda` is indexed like the
/// expressions and sums to 1. For the polymatroid cone `mu` is indexed like
/// [`elemental_inequalities`]; for the normal cone it holds
/// `Σ λ_ℓ E_ℓ(h_W)` for every `W ⊊ V` in bitmask order; for the modular
/// cone it holds the same quantity for `W = V ∖ {i}`, `i = 0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub cone: ConeId,
    pub lambda: Vec<Rational>,
    pub mu: Vec<Rational>,
}

/// A point of the cone on which every expression is at most `−1`.
/// `weights` lists the nonzero step-function weights `(W, c_W)` for the
/// normal and modular cones (modular weights sit on `W = V ∖ {i}`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub cone: ConeId,
    pub h: SetFunction,
    pub weights: Vec<(VarSet, Rational)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecisionResult {
    Valid(Certificate),
    Invalid(Counterexample),
}

impl DecisionResult {
    pub fn is_valid(&self) -> bool {
        matches!(self, DecisionResult::Valid(_))
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            DecisionResult::Valid(c) => Some(c),
            DecisionResult::Invalid(_) => None,
        }
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match self {
            DecisionResult::Valid(_) => None,
            DecisionResult::Invalid(c) => Some(c),
        }
    }

    pub fn verdict(&self) -> &'static str {
        if self.is_valid() {
            "valid"
        } else {
            "invalid"
        }
    }
}

/// `E(h_W) = Σ_{X ⊄ W} c_X`.
pub(crate) fn eval_step(e: &LinearExpression, w: VarSet) -> Rational {
    e.coeffs()
        .iter()
        .filter(|(x, _)| !x.is_subset(w))
        .map(|(_, c)| c.clone())
        .sum()
}

/// The generator sets of the normal or modular cone, in bitmask order.
fn generators(cone: ConeId, n: usize) -> Vec<VarSet> {
    let full = VarSet::full(n);
    match cone {
        ConeId::Modular => (0..n).map(|i| full.without(i)).collect(),
        _ => VarSet::all(n).filter(|&w| w != full).collect(),
    }
}

fn check_size(cone: ConeId, n: usize, opts: &DecideOptions) -> Result<(), DecisionError> {
    let cap = match cone {
        ConeId::Polymatroid => opts.max_n_polymatroid,
        _ => opts.max_n_normal,
    };
    if n > cap {
        return Err(DecisionError::TooLarge { cone, n, cap });
    }
    Ok(())
}

/// Decide with default options.
pub fn decide_max(ineq: &MaxInequality, cone: ConeId) -> Result<DecisionResult, DecisionError> {
    decide_max_with(ineq, cone, &DecideOptions::default())
}

/// Decide a single linear inequality `0 ≤ E(h)`.
pub fn decide_linear(
    expr: &LinearExpression,
    cone: ConeId,
) -> Result<DecisionResult, DecisionError> {
    decide_max(&MaxInequality::linear(expr.clone()), cone)
}

pub fn decide_max_with(
    ineq: &MaxInequality,
    cone: ConeId,
    opts: &DecideOptions,
) -> Result<DecisionResult, DecisionError> {
    let n = ineq.n();
    check_size(cone, n, opts)?;
    if ineq.exprs().is_empty() {
        return Ok(DecisionResult::Invalid(Counterexample {
            cone,
            h: SetFunction::zero(n),
            weights: Vec::new(),
        }));
    }
    // identical expressions share one multiplier
    let mut first: HashMap<&LinearExpression, usize> = HashMap::new();
    let mut reps = Vec::new();
    for (i, e) in ineq.exprs().iter().enumerate() {
        first.entry(e).or_insert_with(|| {
            reps.push(i);
            i
        });
    }
    let (lp, gens) = build_dual_system(ineq, &reps, cone);
    let sum_row = lp.rows - 1;
    match solve_guided(&lp, opts.pivot_limit)? {
        LpOutcome::Optimal { x, .. } => {
            let mut lambda = vec![Rational::zero(); ineq.exprs().len()];
            for (k, &i) in reps.iter().enumerate() {
                lambda[i] = x[k].clone();
            }
            let mu = x[reps.len()..].to_vec();
            let cert = Certificate { cone, lambda, mu };
            debug_assert!(verify_certificate(ineq, &cert));
            Ok(DecisionResult::Valid(cert))
        }
        LpOutcome::Infeasible { farkas } => {
            let t = farkas[sum_row].clone();
            assert!(
                t.is_positive(),
                "Farkas vector must weight the normalisation row"
            );
            let cex = match cone {
                ConeId::Polymatroid => {
                    let h = SetFunction::from_fn(n, |x| {
                        if x.is_empty() {
                            Rational::zero()
                        } else {
                            &farkas[x.index() - 1] / &t
                        }
                    });
                    Counterexample {
                        cone,
                        h,
                        weights: Vec::new(),
                    }
                }
                _ => {
                    let weights: Vec<(VarSet, Rational)> = gens
                        .iter()
                        .enumerate()
                        .map(|(r, &w)| (w, &farkas[r] / &t))
                        .filter(|(_, c)| !c.is_zero())
                        .collect();
                    Counterexample {
                        cone,
                        h: SetFunction::from_step_weights(n, &weights),
                        weights,
                    }
                }
            };
            debug_assert!(verify_counterexample(ineq, &cex));
            Ok(DecisionResult::Invalid(cex))
        }
    }
}

/// Columns: one `λ` per representative expression, then one `μ` per
/// elemental inequality (polymatroid) or generator (normal, modular).
/// Rows: one per coordinate, then the `Σ λ = 1` row.
fn build_dual_system(
    ineq: &MaxInequality,
    reps: &[usize],
    cone: ConeId,
) -> (StandardLp, Vec<VarSet>) {
    let n = ineq.n();
    let one = Rational::one();
    match cone {
        ConeId::Polymatroid => {
            let rows = (1usize << n) - 1 + 1;
            let mut lp = StandardLp::new(rows);
            lp.b[rows - 1] = one.clone();
            for &i in reps {
                let mut col: Column = ineq.exprs()[i]
                    .coeffs()
                    .iter()
                    .map(|(x, c)| (x.index() - 1, c.clone()))
                    .collect();
                col.push((rows - 1, one.clone()));
                lp.push_column(col, Rational::zero());
            }
            for e in &elemental_inequalities(n) {
                let col = e
                    .coeffs()
                    .iter()
                    .map(|(x, c)| (x.index() - 1, -c.clone()))
                    .collect();
                lp.push_column(col, Rational::zero());
            }
            (lp, Vec::new())
        }
        ConeId::Normal | ConeId::Modular => {
            let gens = generators(cone, n);
            let rows = gens.len() + 1;
            let mut lp = StandardLp::new(rows);
            lp.b[rows - 1] = one.clone();
            for &i in reps {
                let e = &ineq.exprs()[i];
                let mut col: Column = gens
                    .iter()
                    .enumerate()
                    .map(|(r, &w)| (r, eval_step(e, w)))
                    .collect();
                col.push((rows - 1, one.clone()));
                lp.push_column(col, Rational::zero());
            }
            for r in 0..gens.len() {
                lp.push_column(vec![(r, -one.clone())], Rational::zero());
            }
            (lp, gens)
        }
    }
}

fn on_simplex(lambda: &[Rational]) -> bool {
    lambda.iter().all(|l| !l.is_negative()) && lambda.iter().sum::<Rational>() == Rational::one()
}

/// Re-check a validity certificate exactly.
pub fn verify_certificate(ineq: &MaxInequality, cert: &Certificate) -> bool {
    if cert.lambda.len() != ineq.exprs().len() || !on_simplex(&cert.lambda) {
        return false;
    }
    if cert.mu.iter().any(|m| m.is_negative()) {
        return false;
    }
    let n = ineq.n();
    let combo = ineq.combine(&cert.lambda);
    match cert.cone {
        ConeId::Polymatroid => {
            let elementals = elemental_inequalities(n);
            if cert.mu.len() != elementals.len() {
                return false;
            }
            let mut rest = combo;
            for (m, e) in cert.mu.iter().zip(&elementals) {
                rest.add_scaled(e, &-m.clone());
            }
            rest.is_zero()
        }
        cone => generators(cone, n)
            .iter()
            .all(|&w| !eval_step(&combo, w).is_negative()),
    }
}

/// Re-check a counterexample: cone membership and every `E_ℓ(h) ≤ −1`.
pub fn verify_counterexample(ineq: &MaxInequality, cex: &Counterexample) -> bool {
    let member = match cex.cone {
        ConeId::Polymatroid => is_polymatroid(&cex.h),
        ConeId::Normal => is_normal(&cex.h),
        ConeId::Modular => is_modular(&cex.h),
    };
    let bound = -Rational::one();
    member && ineq.exprs().iter().all(|e| e.eval(&cex.h) <= bound)
}

/// The `λ` part of a validity certificate.
pub fn lambda_certificate(
    ineq: &MaxInequality,
    cone: ConeId,
) -> Result<Vec<Rational>, DecisionError> {
    match decide_max(ineq, cone)? {
        DecisionResult::Valid(c) => Ok(c.lambda),
        DecisionResult::Invalid(_) => Err(DecisionError::NotValid(cone)),
    }
}

/// Whether `λ` (nonnegative, summing to 1) makes `Σ λ_ℓ E_ℓ` valid on its
/// own over the cone.
pub fn verify_lambda(
    ineq: &MaxInequality,
    cone: ConeId,
    lambda: &[Rational],
) -> Result<bool, DecisionError> {
    if lambda.len() != ineq.exprs().len() || !on_simplex(lambda) {
        return Ok(false);
    }
    Ok(decide_linear(&ineq.combine(lambda), cone)?.is_valid())
}

/// Step weights `c_W ≥ 0` minimising `Σ c_W` subject to every
/// `E_ℓ(Σ c_W h_W) ≤ −1`; `None` when the inequality is valid over the
/// normal cone.
pub fn minimal_normal_counterexample(
    ineq: &MaxInequality,
    opts: &DecideOptions,
) -> Result<Option<Vec<(VarSet, Rational)>>, DecisionError> {
    let n = ineq.n();
    check_size(ConeId::Normal, n, opts)?;
    let gens = generators(ConeId::Normal, n);
    let k = ineq.exprs().len();
    // Σ_W c_W E_ℓ(h_W) + s_ℓ = −1
    let mut lp = StandardLp::new(k);
    for b in lp.b.iter_mut() {
        *b = -Rational::one();
    }
    for &w in &gens {
        let col = ineq
            .exprs()
            .iter()
            .enumerate()
            .map(|(l, e)| (l, eval_step(e, w)))
            .collect();
        lp.push_column(col, Rational::one());
    }
    for l in 0..k {
        lp.push_column(vec![(l, Rational::one())], Rational::zero());
    }
    match solve(&lp, opts.pivot_limit)? {
        LpOutcome::Infeasible { .. } => Ok(None),
        LpOutcome::Optimal { x, .. } => Ok(Some(
            gens.iter()
                .zip(&x)
                .filter(|(_, c)| !c.is_zero())
                .map(|(&w, c)| (w, c.clone()))
                .collect(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inequality::parse_inequality;
    use crate::{rat, ratio};

    fn vs(v: &[usize]) -> VarSet {
        VarSet::from_iter(v.iter().copied())
    }

    fn e1e2e3() -> MaxInequality {
        // E_i = h(X_i X_{i+1}) + h(X_{i+1} | X_i) − h(X1X2X3)
        parse_inequality(
            "0 <= max { h(X1,X2) + h(X2|X1) - h(X1,X2,X3) ; \
                        h(X2,X3) + h(X3|X2) - h(X1,X2,X3) ; \
                        h(X3,X1) + h(X1|X3) - h(X1,X2,X3) }",
        )
        .unwrap()
    }

    #[test]
    fn triple_max_is_valid_with_third_weights() {
        let m = e1e2e3();
        for cone in ConeId::ALL {
            let r = decide_max(&m, cone).unwrap();
            assert!(r.is_valid(), "{cone}");
            assert!(verify_certificate(&m, r.certificate().unwrap()));
        }
        let third = vec![ratio(1, 3); 3];
        assert!(verify_lambda(&m, ConeId::Polymatroid, &third).unwrap());
        // no single expression is valid by itself
        for i in 0..3 {
            let mut l = vec![rat(0); 3];
            l[i] = rat(1);
            assert!(!verify_lambda(&m, ConeId::Polymatroid, &l).unwrap());
        }
    }

    #[test]
    fn negative_singleton_is_invalid_everywhere() {
        let m = parse_inequality("0 <= -h(X1)").unwrap();
        for cone in ConeId::ALL {
            match decide_max(&m, cone).unwrap() {
                DecisionResult::Invalid(c) => {
                    assert!(verify_counterexample(&m, &c));
                    assert_eq!(c.h.get(vs(&[0])), rat(1));
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn elemental_row_is_its_own_certificate() {
        let m = parse_inequality("0 <= h(X1) + h(X2) - h(X1,X2)").unwrap();
        match decide_max(&m, ConeId::Polymatroid).unwrap() {
            DecisionResult::Valid(c) => {
                assert_eq!(c.lambda, vec![rat(1)]);
                // the submodularity row with X = ∅ is index n = 2
                let mut expect = vec![rat(0); 3];
                expect[2] = rat(1);
                assert_eq!(c.mu, expect);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn linear_examples() {
        let m = parse_inequality("0 <= h(X1) + 2 h(X2) + h(X3) - h(X1,X2) - h(X2,X3)").unwrap();
        assert!(decide_max(&m, ConeId::Polymatroid).unwrap().is_valid());
        // −I(X1;X2) vanishes on modular functions and is refuted by h_∅ elsewhere
        let bad = parse_inequality("0 <= h(X1,X2) - h(X1) - h(X2)").unwrap();
        assert!(decide_max(&bad, ConeId::Modular).unwrap().is_valid());
        for cone in [ConeId::Normal, ConeId::Polymatroid] {
            let r = decide_max(&bad, cone).unwrap();
            assert!(!r.is_valid());
            let c = r.counterexample().unwrap();
            assert!(verify_counterexample(&bad, c));
            assert!(bad.exprs()[0].eval(&c.h) <= rat(-1));
        }
    }

    #[test]
    fn duplicated_list_accepts_any_lambda() {
        let e = parse_inequality("0 <= h(X1) + h(X2) - h(X1,X2)")
            .unwrap()
            .exprs()[0]
            .clone();
        let m = MaxInequality::new(2, vec![e.clone(), e]);
        let r = decide_max(&m, ConeId::Polymatroid).unwrap();
        assert!(verify_certificate(&m, r.certificate().unwrap()));
        for l in [ratio(0, 1), ratio(1, 4), ratio(1, 2), ratio(1, 1)] {
            assert!(verify_lambda(&m, ConeId::Polymatroid, &[l.clone(), rat(1) - l]).unwrap());
        }
    }

    #[test]
    fn parity_separates_normal_from_polymatroid() {
        // I(X1;X2|X3) ≤ I(X1;X2): true on normal functions, false on parity
        let m = parse_inequality(
            "0 <= h(X1) + h(X2) - h(X1,X2) - h(X1,X3) - h(X2,X3) + h(X1,X2,X3) + h(X3)",
        )
        .unwrap();
        assert!(decide_max(&m, ConeId::Normal).unwrap().is_valid());
        assert!(decide_max(&m, ConeId::Modular).unwrap().is_valid());
        let r = decide_max(&m, ConeId::Polymatroid).unwrap();
        assert!(!r.is_valid());
        assert!(verify_counterexample(&m, r.counterexample().unwrap()));
    }

    #[test]
    fn minimal_normal_weights() {
        let bad = parse_inequality("0 <= h(X1,X2) - h(X1) - h(X2)").unwrap();
        let w = minimal_normal_counterexample(&bad, &DecideOptions::default())
            .unwrap()
            .unwrap();
        let h = SetFunction::from_step_weights(2, &w);
        assert!(bad.exprs()[0].eval(&h) <= rat(-1));
        let total: Rational = w.iter().map(|(_, c)| c.clone()).sum();
        assert_eq!(total, rat(1));
        assert_eq!(w, vec![(VarSet::EMPTY, rat(1))]);
        let good = parse_inequality("0 <= h(X1)").unwrap();
        assert_eq!(
            minimal_normal_counterexample(&good, &DecideOptions::default()).unwrap(),
            None
        );
    }

    #[test]
    fn size_caps_and_empty() {
        let opts = DecideOptions {
            max_n_polymatroid: 1,
            ..Default::default()
        };
        let m = parse_inequality("0 <= h(X1,X2)").unwrap();
        assert!(matches!(
            decide_max_with(&m, ConeId::Polymatroid, &opts),
            Err(DecisionError::TooLarge { .. })
        ));
        let empty = MaxInequality::new(2, Vec::new());
        assert!(!decide_max(&empty, ConeId::Polymatroid).unwrap().is_valid());
    }
}

//! Linear and max-linear information inequalities over set functions, and
//! their exact decision over the modular, normal and polymatroid cones.

mod decide;
pub mod lp;
mod parse;

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::polymatroid::SetFunction;
use crate::varset::VarSet;
use crate::Rational;

pub use decide::{
    decide_linear, decide_max, decide_max_with, lambda_certificate, minimal_normal_counterexample,
    verify_certificate, verify_counterexample, verify_lambda, Certificate, Counterexample,
    DecideOptions, DecisionError, DecisionResult,
};
pub use parse::{parse_inequality, parse_inequality_with_names, InequalityParseError};

/// `Σ_X c_X h(X)` over `n` variables; the empty-set coefficient is always 0
/// and zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinearExpression {
    n: usize,
    coeffs: BTreeMap<VarSet, Rational>,
}

impl LinearExpression {
    pub fn zero(n: usize) -> LinearExpression {
        LinearExpression {
            n,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn from_terms(
        n: usize,
        terms: impl IntoIterator<Item = (VarSet, Rational)>,
    ) -> LinearExpression {
        let mut e = LinearExpression::zero(n);
        for (x, c) in terms {
            e.add_term(x, &c);
        }
        e
    }

    /// Integer coefficients, as `(subset, coefficient)` pairs.
    pub fn from_ints(n: usize, terms: &[(VarSet, i64)]) -> LinearExpression {
        LinearExpression::from_terms(n, terms.iter().map(|&(x, c)| (x, crate::rat(c))))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &BTreeMap<VarSet, Rational> {
        &self.coeffs
    }

    pub fn coeff(&self, x: VarSet) -> Rational {
        self.coeffs.get(&x).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Add `c·h(x)`.
    pub fn add_term(&mut self, x: VarSet, c: &Rational) {
        assert!(
            x.max().is_none_or(|m| m < self.n),
            "term {x:?} outside {} variables",
            self.n
        );
        if x.is_empty() || c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(x).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&x);
        }
    }

    /// Add `c·h(y | x) = c·h(x ∪ y) − c·h(x)`.
    pub fn add_conditional(&mut self, y: VarSet, x: VarSet, c: &Rational) {
        self.add_term(x.union(y), c);
        self.add_term(x, &-c);
    }

    pub fn add(&self, other: &LinearExpression) -> LinearExpression {
        let mut e = self.clone();
        e.add_scaled(other, &Rational::one());
        e
    }

    pub fn add_scaled(&mut self, other: &LinearExpression, c: &Rational) {
        for (&x, v) in &other.coeffs {
            self.add_term(x, &(v * c));
        }
    }

    pub fn scale(&self, c: &Rational) -> LinearExpression {
        LinearExpression::from_terms(self.n, self.coeffs.iter().map(|(&x, v)| (x, v * c)))
    }

    pub fn neg(&self) -> LinearExpression {
        self.scale(&-Rational::one())
    }

    /// Exact evaluation on a rational set function.
    pub fn eval(&self, h: &SetFunction) -> Rational {
        self.coeffs.iter().map(|(&x, c)| c * h.get(x)).sum()
    }

    /// Floating-point evaluation on a real set function.
    pub fn eval_f64(&self, h: &SetFunction<f64>) -> f64 {
        use num_traits::ToPrimitive;
        self.coeffs
            .iter()
            .map(|(&x, c)| c.to_f64().unwrap_or(f64::NAN) * h.get(x))
            .sum()
    }

    /// `E ∘ φ`: re-key every coefficient by the image of its subset under
    /// `phi` (a map from variable index to variable index in `n_target`
    /// variables), summing colliding images.
    pub fn substitute(&self, phi: &[usize], n_target: usize) -> LinearExpression {
        let mut e = LinearExpression::zero(n_target);
        for (&x, c) in &self.coeffs {
            e.add_term(x.map(phi), c);
        }
        e
    }

    /// Like [`LinearExpression::substitute`], but each variable maps to a
    /// set of variables.
    pub fn substitute_sets(&self, phi: &[VarSet], n_target: usize) -> LinearExpression {
        let mut e = LinearExpression::zero(n_target);
        for (&x, c) in &self.coeffs {
            let img = x.iter().fold(VarSet::EMPTY, |a, v| a.union(phi[v]));
            e.add_term(img, c);
        }
        e
    }

    /// Same coefficients viewed over a wider variable set.
    pub fn widen(&self, n: usize) -> LinearExpression {
        assert!(n >= self.n);
        LinearExpression {
            n,
            coeffs: self.coeffs.clone(),
        }
    }

    /// Dense coefficient vector indexed by subset bitmask (length `2^n`).
    pub fn dense(&self) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); 1 << self.n];
        for (x, c) in &self.coeffs {
            v[x.index()] = c.clone();
        }
        v
    }

    /// Human-readable form using the given variable names.
    pub fn to_text(&self, names: &[String]) -> String {
        if self.coeffs.is_empty() {
            return "0".to_string();
        }
        let mut s = String::new();
        for (k, (x, c)) in self.coeffs.iter().enumerate() {
            let vars: Vec<&str> = x.iter().map(|v| names[v].as_str()).collect();
            let mag = c.abs();
            if k == 0 {
                if c.is_negative() {
                    s.push_str("- ");
                }
            } else if c.is_negative() {
                s.push_str(" - ");
            } else {
                s.push_str(" + ");
            }
            if !mag.is_one() {
                s.push_str(&format!("{mag} "));
            }
            s.push_str(&format!("h({})", vars.join(",")));
        }
        s
    }
}

impl fmt::Display for LinearExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text(&default_names(self.n)))
    }
}

/// `X1, X2, …` names for `n` variables.
pub fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("X{i}")).collect()
}

/// The cones an inequality can be decided over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConeId {
    Modular,
    Normal,
    Polymatroid,
}

impl ConeId {
    pub const ALL: [ConeId; 3] = [ConeId::Modular, ConeId::Normal, ConeId::Polymatroid];

    pub fn name(self) -> &'static str {
        match self {
            ConeId::Modular => "modular",
            ConeId::Normal => "normal",
            ConeId::Polymatroid => "polymatroid",
        }
    }

    pub fn from_name(s: &str) -> Option<ConeId> {
        ConeId::ALL.into_iter().find(|c| c.name() == s)
    }
}

impl fmt::Display for ConeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `0 ≤ max_ℓ E_ℓ(h)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxInequality {
    n: usize,
    names: Vec<String>,
    exprs: Vec<LinearExpression>,
}

impl MaxInequality {
    /// All expressions must be over `n` variables.
    pub fn new(n: usize, exprs: Vec<LinearExpression>) -> MaxInequality {
        MaxInequality::with_names(default_names(n), exprs)
    }

    pub fn with_names(names: Vec<String>, exprs: Vec<LinearExpression>) -> MaxInequality {
        let n = names.len();
        assert!(
            exprs.iter().all(|e| e.n() == n),
            "expressions disagree on the variable count"
        );
        MaxInequality { n, names, exprs }
    }

    pub fn linear(e: LinearExpression) -> MaxInequality {
        MaxInequality::new(e.n(), vec![e])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn exprs(&self) -> &[LinearExpression] {
        &self.exprs
    }

    /// `max_ℓ E_ℓ(h)`, or `None` for an empty list.
    pub fn eval_max(&self, h: &SetFunction) -> Option<Rational> {
        self.exprs.iter().map(|e| e.eval(h)).max()
    }

    pub fn eval_max_f64(&self, h: &SetFunction<f64>) -> Option<f64> {
        self.exprs.iter().map(|e| e.eval_f64(h)).reduce(f64::max)
    }

    /// `Σ λ_ℓ E_ℓ`.
    pub fn combine(&self, lambda: &[Rational]) -> LinearExpression {
        assert_eq!(lambda.len(), self.exprs.len());
        let mut e = LinearExpression::zero(self.n);
        for (l, ex) in lambda.iter().zip(&self.exprs) {
            e.add_scaled(ex, l);
        }
        e
    }

    pub fn to_text(&self) -> String {
        let parts: Vec<String> = self.exprs.iter().map(|e| e.to_text(&self.names)).collect();
        if parts.len() == 1 {
            format!("0 <= {}", parts[0])
        } else {
            format!("0 <= max {{ {} }}", parts.join(" ; "))
        }
    }
}

impl fmt::Display for MaxInequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Elemental Shannon inequalities: `h(V) − h(V∖i)` for each `i`, then
/// `h(Xi) + h(Xj) − h(Xij) − h(X)` for `i < j`, `X ⊆ V∖{i,j}`.
pub fn elemental_inequalities(n: usize) -> Vec<LinearExpression> {
    let full = VarSet::full(n);
    let mut out = Vec::with_capacity(n + n * n.saturating_sub(1) / 2 * (1 << n.saturating_sub(2)));
    let one = Rational::one();
    for i in 0..n {
        let mut e = LinearExpression::zero(n);
        e.add_term(full, &one);
        e.add_term(full.without(i), &-one.clone());
        out.push(e);
    }
    for i in 0..n {
        for j in i + 1..n {
            let rest = full.without(i).without(j);
            for x in rest.subsets() {
                let mut e = LinearExpression::zero(n);
                e.add_term(x.with(i), &one);
                e.add_term(x.with(j), &one);
                e.add_term(x.with(i).with(j), &-one.clone());
                e.add_term(x, &-one.clone());
                out.push(e);
            }
        }
    }
    out
}

/// A conditional-form reading `Σ d·h(Y|X) − q·h(V)` of an expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionalForm {
    /// `(d, Y, X)` with `d > 0` and `X ⊊ X ∪ Y`.
    pub terms: Vec<(Rational, VarSet, VarSet)>,
    pub q: Rational,
}

/// Shape flags reported by [`classify_expression`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpressionClass {
    /// `None` when the expression is not of the special form.
    pub form: Option<ConditionalForm>,
    pub unconditioned: bool,
    pub simple: bool,
}

impl ConditionalForm {
    pub fn is_simple(&self) -> bool {
        self.terms.iter().all(|(_, _, x)| x.len() <= 1)
    }

    pub fn is_unconditioned(&self) -> bool {
        self.terms.iter().all(|(_, _, x)| x.is_empty())
    }

    pub fn expand(&self, n: usize) -> LinearExpression {
        let mut e = LinearExpression::zero(n);
        for (d, y, x) in &self.terms {
            e.add_conditional(*y, *x, d);
        }
        e.add_term(VarSet::full(n), &-self.q.clone());
        e
    }
}

/// Try to write `expr` as `Σ d·h(Y|X) − q·h(V)` with `d > 0`, `q ≥ 0`.
///
/// Negative coefficients below the top are matched greedily against
/// positive supersets, largest negative sets first; whatever positive mass
/// is left becomes unconditioned terms. The greedy matching can miss a
/// decomposition that exists, in which case the form is reported absent.
pub fn classify_expression(expr: &LinearExpression) -> ExpressionClass {
    let n = expr.n();
    let full = VarSet::full(n);
    let mut pos: BTreeMap<VarSet, Rational> = BTreeMap::new();
    let mut neg: Vec<(VarSet, Rational)> = Vec::new();
    let mut q = Rational::zero();
    for (&x, c) in expr.coeffs() {
        if x == full && c.is_negative() {
            q = -c.clone();
        } else if c.is_positive() {
            pos.insert(x, c.clone());
        } else {
            neg.push((x, -c.clone()));
        }
    }
    neg.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
    let mut terms = Vec::new();
    let mut ok = true;
    for (x, mut need) in neg {
        let supersets: Vec<VarSet> = pos
            .keys()
            .copied()
            .filter(|&y| x.is_subset(y) && y != x)
            .collect();
        for y in supersets {
            if need.is_zero() {
                break;
            }
            let have = pos[&y].clone();
            let take = if have < need {
                have.clone()
            } else {
                need.clone()
            };
            terms.push((take.clone(), y.difference(x), x));
            need -= &take;
            let left = have - take;
            if left.is_zero() {
                pos.remove(&y);
            } else {
                pos.insert(y, left);
            }
        }
        if !need.is_zero() {
            ok = false;
            break;
        }
    }
    if !ok {
        return ExpressionClass {
            form: None,
            unconditioned: false,
            simple: false,
        };
    }
    for (y, d) in pos {
        terms.push((d, y, VarSet::EMPTY));
    }
    terms.sort_by_key(|a| (a.2, a.1));
    let form = ConditionalForm { terms, q };
    debug_assert_eq!(&form.expand(n), expr);
    ExpressionClass {
        unconditioned: form.is_unconditioned(),
        simple: form.is_simple(),
        form: Some(form),
    }
}

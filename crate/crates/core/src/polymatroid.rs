//! Set functions over the subset lattice of `n` variables.
//!
//! Two numeric regimes share one generic type: exact rationals for
//! synthetic and LP-facing functions, and base-2 reals (tolerance `1e-9`)
//! for entropies of relations, which are irrational in general.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Debug};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::structures::VRelation;
use crate::varset::VarSet;
use crate::Rational;

/// Comparison tolerance for real-valued set functions.
pub const REAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolymatroidError {
    #[error("input is not a polymatroid")]
    NotPolymatroid,
    #[error("entropy of an empty relation is undefined")]
    EmptyRelation,
    #[error("step function needs a proper subset, got the full set")]
    FullStep,
    #[error("malformed set function text at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Arithmetic shared by the exact and real regimes.
pub trait Scalar: Clone + Debug + PartialEq {
    fn zero_value() -> Self;
    fn from_int(v: i64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    /// Strictly below zero, beyond tolerance.
    fn is_neg(&self) -> bool;
    /// Equal within tolerance.
    fn approx_eq(&self, o: &Self) -> bool;
    fn to_f64(&self) -> f64;
    fn render(&self) -> String;
    fn parse(s: &str) -> Option<Self>;

    fn is_pos(&self) -> bool {
        Self::zero_value().sub(self).is_neg()
    }
}

impl Scalar for Rational {
    fn zero_value() -> Self {
        <Rational as Zero>::zero()
    }
    fn from_int(v: i64) -> Self {
        Rational::from_integer(v.into())
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn is_neg(&self) -> bool {
        self.is_negative()
    }
    fn approx_eq(&self, o: &Self) -> bool {
        self == o
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn render(&self) -> String {
        self.to_string()
    }
    fn parse(s: &str) -> Option<Self> {
        crate::parse_rational(s)
    }
}

impl Scalar for f64 {
    fn zero_value() -> Self {
        0.0
    }
    fn from_int(v: i64) -> Self {
        v as f64
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn is_neg(&self) -> bool {
        *self < -REAL_TOLERANCE
    }
    fn approx_eq(&self, o: &Self) -> bool {
        (self - o).abs() <= REAL_TOLERANCE
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn render(&self) -> String {
        format!("{self}")
    }
    fn parse(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
}

/// `h : 2^[n] → T`, stored densely by subset bitmask; `h(∅)` is kept.
#[derive(Clone, PartialEq, Eq)]
pub struct SetFunction<T = Rational> {
    n: usize,
    values: Vec<T>,
}

/// Real-valued set function (entropies of relations).
pub type RealSetFunction = SetFunction<f64>;

/// The dual `g(X) = Σ_{Y ⊇ X} (−1)^{|Y−X|} h(Y)` of a set function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MobiusVector<T = Rational> {
    n: usize,
    values: Vec<T>,
}

impl<T: Scalar> SetFunction<T> {
    pub fn zero(n: usize) -> Self {
        SetFunction {
            n,
            values: vec![T::zero_value(); 1 << n],
        }
    }

    /// Dense values indexed by subset bitmask; length must be `2^n`.
    pub fn new(n: usize, values: Vec<T>) -> Self {
        assert_eq!(
            values.len(),
            1 << n,
            "a set function over {n} variables needs 2^{n} values"
        );
        SetFunction { n, values }
    }

    pub fn from_fn(n: usize, f: impl Fn(VarSet) -> T) -> Self {
        SetFunction {
            n,
            values: VarSet::all(n).map(f).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, x: VarSet) -> T {
        self.values[x.index()].clone()
    }

    pub fn set(&mut self, x: VarSet, v: T) {
        self.values[x.index()] = v;
    }

    pub fn full(&self) -> VarSet {
        VarSet::full(self.n)
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.n, o.n);
        SetFunction {
            n: self.n,
            values: self
                .values
                .iter()
                .zip(&o.values)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    /// Pointwise equality within the regime's tolerance.
    pub fn approx_eq(&self, o: &Self) -> bool {
        self.n == o.n
            && self
                .values
                .iter()
                .zip(&o.values)
                .all(|(a, b)| a.approx_eq(b))
    }

    /// `h ≤ o` pointwise within tolerance.
    pub fn dominated_by(&self, o: &Self) -> bool {
        self.n == o.n
            && self
                .values
                .iter()
                .zip(&o.values)
                .all(|(a, b)| !b.sub(a).is_neg())
    }

    pub fn to_f64(&self) -> RealSetFunction {
        SetFunction {
            n: self.n,
            values: self.values.iter().map(|v| v.to_f64()).collect(),
        }
    }

    /// Lines `h(<vars>) = <value>`, one per nonempty subset in bitmask order.
    pub fn to_text(&self, names: &[String]) -> String {
        let mut s = String::new();
        for x in VarSet::all(self.n).skip(1) {
            let vs: Vec<&str> = x.iter().map(|v| names[v].as_str()).collect();
            s.push_str(&format!("h({}) = {}\n", vs.join(","), self.get(x).render()));
        }
        s
    }

    /// Parse the text form. Every nonempty subset must be listed; `h()`
    /// may be given and must be 0. Variables are numbered in natural name
    /// order unless `names` is given.
    pub fn from_text(
        text: &str,
        names: Option<&[String]>,
    ) -> Result<(Self, Vec<String>), PolymatroidError> {
        let err = |line: usize, m: &str| PolymatroidError::Parse {
            line,
            message: m.to_string(),
        };
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (lhs, rhs) = line
                .split_once('=')
                .ok_or_else(|| err(i + 1, "expected '='"))?;
            let lhs = lhs.trim();
            let inner = lhs
                .strip_prefix("h(")
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(|| err(i + 1, "expected h(<vars>)"))?;
            let vars: Vec<String> = inner
                .split(',')
                .map(|v| v.trim().to_string())
                .filter(|v| !v.is_empty())
                .collect();
            let value = T::parse(rhs).ok_or_else(|| err(i + 1, "bad value"))?;
            entries.push((i + 1, vars, value));
        }
        let names: Vec<String> = match names {
            Some(n) => n.to_vec(),
            None => {
                let mut all: Vec<String> = entries
                    .iter()
                    .flat_map(|(_, v, _)| v.iter().cloned())
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                all.sort_by(|a, b| crate::varset::natural_cmp(a, b));
                all
            }
        };
        let n = names.len();
        if n > crate::varset::MAX_VARS {
            return Err(err(0, "too many variables"));
        }
        let mut values: Vec<Option<T>> = vec![None; 1 << n];
        values[0] = Some(T::zero_value());
        for (line, vars, value) in entries {
            let mut x = VarSet::EMPTY;
            for v in &vars {
                let idx = names
                    .iter()
                    .position(|m| m == v)
                    .ok_or_else(|| err(line, "unknown variable"))?;
                x.insert(idx);
            }
            if x.is_empty() && value != T::zero_value() {
                return Err(err(line, "h() must be 0"));
            }
            values[x.index()] = Some(value);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| {
                    err(
                        0,
                        &format!("missing value for subset {:?}", VarSet(i as u32)),
                    )
                })
            })
            .collect::<Result<Vec<T>, _>>()?;
        Ok((SetFunction { n, values }, names))
    }
}

impl<T: Scalar> Debug for SetFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for x in VarSet::all(self.n) {
            m.entry(&x, &self.values[x.index()]);
        }
        m.finish()
    }
}

impl SetFunction<Rational> {
    /// `Σ c_W h_W`.
    pub fn from_step_weights(n: usize, weights: &[(VarSet, Rational)]) -> SetFunction {
        let mut h = SetFunction::zero(n);
        for (w, c) in weights {
            for x in VarSet::all(n) {
                if !x.is_subset(*w) {
                    h.values[x.index()] += c;
                }
            }
        }
        h
    }
}

impl RealSetFunction {
    /// Nearest rationals with denominators at most `max_den`.
    pub fn rationalize(&self, max_den: u64) -> SetFunction {
        SetFunction {
            n: self.n,
            values: self
                .values
                .iter()
                .map(|&v| approximate(v, max_den))
                .collect(),
        }
    }
}

/// Best rational approximation by continued fractions.
pub fn approximate(v: f64, max_den: u64) -> Rational {
    if !v.is_finite() {
        return Rational::zero();
    }
    let neg = v < 0.0;
    let mut x = v.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    for _ in 0..64 {
        let a = x.floor();
        if a > u32::MAX as f64 {
            break;
        }
        let a = a as u64;
        let (p2, q2) = (
            a.saturating_mul(p1).saturating_add(p0),
            a.saturating_mul(q1).saturating_add(q0),
        );
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = x - a as f64;
        if frac < 1e-15 {
            break;
        }
        x = 1.0 / frac;
    }
    if q1 == 0 {
        return Rational::zero();
    }
    let r = Rational::new(BigInt::from(p1), BigInt::from(q1));
    if neg {
        -r
    } else {
        r
    }
}

impl<T: Scalar> MobiusVector<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, x: VarSet) -> T {
        self.values[x.index()].clone()
    }

    /// Nonzero entries (beyond tolerance), in bitmask order.
    pub fn support(&self) -> Vec<(VarSet, T)> {
        VarSet::all(self.n)
            .filter(|x| !self.values[x.index()].approx_eq(&T::zero_value()))
            .map(|x| (x, self.get(x)))
            .collect()
    }
}

/// `g(X) = Σ_{Y ⊇ X} (−1)^{|Y−X|} h(Y)`.
pub fn mobius_inverse<T: Scalar>(h: &SetFunction<T>) -> MobiusVector<T> {
    let mut g = h.values.clone();
    for i in 0..h.n {
        let bit = 1usize << i;
        for x in 0..g.len() {
            if x & bit == 0 {
                g[x] = g[x].sub(&g[x | bit]);
            }
        }
    }
    MobiusVector { n: h.n, values: g }
}

/// `h(X) = Σ_{Y ⊇ X} g(Y)`.
pub fn mobius_forward<T: Scalar>(g: &MobiusVector<T>) -> SetFunction<T> {
    let mut h = g.values.clone();
    for i in 0..g.n {
        let bit = 1usize << i;
        for x in 0..h.len() {
            if x & bit == 0 {
                h[x] = h[x].add(&h[x | bit]);
            }
        }
    }
    SetFunction { n: g.n, values: h }
}

/// Monotone, submodular, and `h(∅) = 0`, checked on the elemental
/// inequalities.
pub fn is_polymatroid<T: Scalar>(h: &SetFunction<T>) -> bool {
    let n = h.n;
    if !h.values[0].approx_eq(&T::zero_value()) {
        return false;
    }
    let full = h.full();
    for i in 0..n {
        if h.get(full).sub(&h.get(full.without(i))).is_neg() {
            return false;
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for x in full.without(i).without(j).subsets() {
                let s = h
                    .get(x.with(i))
                    .add(&h.get(x.with(j)))
                    .sub(&h.get(x.with(i).with(j)))
                    .sub(&h.get(x));
                if s.is_neg() {
                    return false;
                }
            }
        }
    }
    true
}

/// `h(X) = Σ_{i∈X} h({i})` for every `X`, with nonnegative singletons.
pub fn is_modular<T: Scalar>(h: &SetFunction<T>) -> bool {
    if (0..h.n).any(|i| h.get(VarSet::singleton(i)).is_neg()) {
        return false;
    }
    VarSet::all(h.n).all(|x| {
        let s = x
            .iter()
            .fold(T::zero_value(), |a, i| a.add(&h.get(VarSet::singleton(i))));
        s.approx_eq(&h.get(x))
    })
}

/// Nonnegative combination of step functions: `h(∅) = 0` and the Möbius
/// inverse is `≤ 0` off the top element.
pub fn is_normal<T: Scalar>(h: &SetFunction<T>) -> bool {
    if !h.values[0].approx_eq(&T::zero_value()) {
        return false;
    }
    let g = mobius_inverse(h);
    let full = h.full();
    VarSet::all(h.n)
        .filter(|&x| x != full)
        .all(|x| !g.get(x).is_pos())
}

/// `h_W(X) = 0` if `X ⊆ W`, else 1.
pub fn step_function(w: VarSet, n: usize) -> Result<SetFunction, PolymatroidError> {
    if w == VarSet::full(n) {
        return Err(PolymatroidError::FullStep);
    }
    Ok(SetFunction::from_fn(n, |x| {
        if x.is_subset(w) {
            Rational::zero()
        } else {
            Rational::one()
        }
    }))
}

/// `Σ a_i h_{V∖{i}}`, i.e. `h(X) = Σ_{i∈X} a_i`.
pub fn modular_from_singletons(a: &[Rational]) -> SetFunction {
    SetFunction::from_fn(a.len(), |x| x.iter().map(|i| a[i].clone()).sum())
}

/// `h(Y | X) = h(X ∪ Y) − h(X)`.
pub fn conditional<T: Scalar>(h: &SetFunction<T>, y: VarSet, x: VarSet) -> T {
    h.get(x.union(y)).sub(&h.get(x))
}

/// `I(Y; Z | X) = h(XY) + h(XZ) − h(XYZ) − h(X)`.
pub fn mutual_information<T: Scalar>(h: &SetFunction<T>, y: VarSet, z: VarSet, x: VarSet) -> T {
    h.get(x.union(y))
        .add(&h.get(x.union(z)))
        .sub(&h.get(x.union(y).union(z)))
        .sub(&h.get(x))
}

/// `h(X) = max_{i∈X} a_i` (0 on the empty set).
pub fn max_normal(a: &[Rational]) -> SetFunction {
    SetFunction::from_fn(a.len(), |x| {
        x.iter()
            .map(|i| a[i].clone())
            .max()
            .unwrap_or_else(Rational::zero)
    })
}

/// A normal polymatroid `h' ≤ h` agreeing with `h` on singletons and on
/// the full set.
///
/// Recursion on the last variable `n`: the conditional polymatroid
/// `h(· | n)` over the remaining variables is dominated recursively, giving
/// `B`; then `h' = A + B'`, where `B'(X) = B(X ∖ n)` and `A` is the max
/// function with `a_i = I(i; n)` for `i < n` and `a_n = h(n)`. Both parts
/// are normal, so the sum is.
pub fn normal_dominant(h: &SetFunction) -> Result<SetFunction, PolymatroidError> {
    if !is_polymatroid(h) {
        return Err(PolymatroidError::NotPolymatroid);
    }
    Ok(normal_dominant_rec(h))
}

fn normal_dominant_rec(h: &SetFunction) -> SetFunction {
    let n = h.n;
    if n <= 1 {
        return h.clone();
    }
    let last = n - 1;
    let ln = VarSet::singleton(last);
    let h_last = h.get(ln);
    let cond = SetFunction::from_fn(last, |x| h.get(x.with(last)) - &h_last);
    let rest = normal_dominant_rec(&cond);
    let mut a: Vec<Rational> = (0..last)
        .map(|i| mutual_information(h, VarSet::singleton(i), ln, VarSet::EMPTY))
        .collect();
    a.push(h_last);
    let top = max_normal(&a);
    SetFunction::from_fn(n, |x| top.get(x) + rest.get(x.without(last)))
}

/// `h''(X) = Σ_{i∈X} h({i} | {0..i−1})`.
pub fn modularization(h: &SetFunction) -> SetFunction {
    let a: Vec<Rational> = (0..h.n)
        .map(|i| conditional(h, VarSet::singleton(i), VarSet::full(i)))
        .collect();
    modular_from_singletons(&a)
}

/// Entropy of three parity bits: singletons 1, every larger set 2.
pub fn parity_function() -> SetFunction {
    SetFunction::from_fn(3, |x| match x.len() {
        0 => Rational::zero(),
        1 => Rational::one(),
        _ => Rational::from_integer(2.into()),
    })
}

/// Base-2 marginal entropies of the uniform distribution on the rows of
/// `p`. Uniform marginals use `log2` of the support size directly.
pub fn entropy_of_relation(p: &VRelation) -> Result<RealSetFunction, PolymatroidError> {
    let rows = p.rows();
    let total = rows.len();
    if total == 0 {
        return Err(PolymatroidError::EmptyRelation);
    }
    let n = p.arity();
    let nf = total as f64;
    let mut values = Vec::with_capacity(1 << n);
    for x in VarSet::all(n) {
        let cols: Vec<usize> = x.iter().collect();
        let mut counts: HashMap<Vec<u32>, usize> = HashMap::new();
        for r in rows {
            *counts
                .entry(cols.iter().map(|&c| r[c]).collect())
                .or_insert(0) += 1;
        }
        let first = *counts.values().next().expect("nonempty");
        let v = if counts.values().all(|&c| c == first) {
            (counts.len() as f64).log2()
        } else {
            counts
                .values()
                .map(|&c| {
                    let q = c as f64 / nf;
                    -q * q.log2()
                })
                .sum()
        };
        values.push(v);
    }
    Ok(SetFunction { n, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, ratio};

    fn vs(v: &[usize]) -> VarSet {
        VarSet::from_iter(v.iter().copied())
    }

    #[test]
    fn step_mobius() {
        let w = vs(&[0]);
        let h = step_function(w, 3).unwrap();
        let g = mobius_inverse(&h);
        assert_eq!(g.support(), vec![(w, rat(-1)), (VarSet::full(3), rat(1))]);
        assert_eq!(mobius_forward(&g), h);
        assert!(is_normal(&h) && is_polymatroid(&h) && !is_modular(&h));
        assert!(step_function(VarSet::full(3), 3).is_err());
        let z = SetFunction::<Rational>::zero(3);
        assert!(mobius_inverse(&z).support().is_empty());
    }

    #[test]
    fn parity_values() {
        let h = parity_function();
        let g = mobius_inverse(&h);
        assert_eq!(g.get(VarSet::EMPTY), rat(1));
        for i in 0..3 {
            assert_eq!(g.get(VarSet::singleton(i)), rat(-1));
        }
        for p in [vs(&[0, 1]), vs(&[0, 2]), vs(&[1, 2])] {
            assert_eq!(g.get(p), rat(0));
        }
        assert_eq!(g.get(VarSet::full(3)), rat(2));
        assert!(is_polymatroid(&h));
        assert!(!is_normal(&h));
        assert_eq!(conditional(&h, vs(&[1]), vs(&[0])), rat(1));
    }

    #[test]
    fn parity_dominant() {
        let h = parity_function();
        let d = normal_dominant(&h).unwrap();
        for i in 0..3 {
            assert_eq!(d.get(VarSet::singleton(i)), rat(1));
        }
        assert_eq!(d.get(vs(&[0, 1])), rat(1));
        assert_eq!(d.get(vs(&[0, 2])), rat(2));
        assert_eq!(d.get(vs(&[1, 2])), rat(2));
        assert_eq!(d.get(VarSet::full(3)), rat(2));
        assert!(is_normal(&d) && d.dominated_by(&h));
    }

    #[test]
    fn dominant_of_modular_and_zero() {
        let m = modular_from_singletons(&[rat(1), ratio(1, 2), rat(3)]);
        assert_eq!(normal_dominant(&m).unwrap(), m);
        let z = SetFunction::<Rational>::zero(4);
        assert_eq!(normal_dominant(&z).unwrap(), z);
        let mut bad = SetFunction::<Rational>::zero(2);
        bad.set(vs(&[0]), rat(1));
        assert_eq!(normal_dominant(&bad), Err(PolymatroidError::NotPolymatroid));
    }

    #[test]
    fn modular_pieces() {
        let m = modular_from_singletons(&[rat(1), rat(2)]);
        assert_eq!(m.get(vs(&[0, 1])), rat(3));
        assert!(is_modular(&m) && is_normal(&m));
        let h0 = step_function(VarSet::EMPTY, 1).unwrap();
        assert_eq!(h0.get(vs(&[0])), rat(1));
        // h = Σ h({i}) h_{V∖i}
        let mut sum = SetFunction::zero(2);
        for i in 0..2 {
            let s = step_function(VarSet::full(2).without(i), 2).unwrap();
            let scaled = SetFunction::from_fn(2, |x| s.get(x) * m.get(VarSet::singleton(i)));
            sum = sum.add(&scaled);
        }
        assert_eq!(sum, m);
        // |V − W| = 1 makes the step function modular
        assert!(is_modular(&step_function(vs(&[0, 1]), 3).unwrap()));
    }

    #[test]
    fn max_normal_mobius() {
        let h = max_normal(&[rat(1), rat(2), rat(3)]);
        assert_eq!(h.get(vs(&[0, 1])), rat(2));
        assert_eq!(h.get(VarSet::full(3)), rat(3));
        assert!(is_normal(&h));
        let g = mobius_inverse(&h);
        assert_eq!(
            g.support(),
            vec![
                (VarSet::EMPTY, rat(-1)),
                (vs(&[0]), rat(-1)),
                (vs(&[0, 1]), rat(-1)),
                (vs(&[0, 1, 2]), rat(3))
            ]
        );
    }

    #[test]
    fn modularization_of_parity() {
        let m = modularization(&parity_function());
        assert_eq!(m.get(vs(&[0])), rat(1));
        assert_eq!(m.get(vs(&[1])), rat(1));
        assert_eq!(m.get(vs(&[2])), rat(0));
        assert_eq!(m.get(VarSet::full(3)), rat(2));
    }

    #[test]
    fn text_roundtrip() {
        let h = parity_function();
        let names: Vec<String> = ["X", "Y", "Z"].iter().map(|s| s.to_string()).collect();
        let txt = h.to_text(&names);
        assert!(txt.starts_with("h(X) = 1\nh(Y) = 1\nh(X,Y) = 2\n"));
        let (back, got) = SetFunction::<Rational>::from_text(&txt, None).unwrap();
        assert_eq!(back, h);
        assert_eq!(got, names);
        assert!(SetFunction::<Rational>::from_text("h(X) = 1\n", Some(&names)).is_err());
    }

    #[test]
    fn approximation() {
        assert_eq!(approximate(2.0, 100), rat(2));
        assert_eq!(approximate(1.0 / 3.0, 100), ratio(1, 3));
        assert_eq!(approximate(-0.75, 100), ratio(-3, 4));
    }
}

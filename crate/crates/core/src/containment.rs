//! The decision pipeline for `Q1 ⪯ Q2` under bag-set semantics, plus the
//! witness machinery used to refute containment.
//!
//! Containment is reduced to the max-linear inequality
//! `h(vars(Q1)) ≤ max_φ (E_T ∘ φ)(h)` over the homomorphisms
//! `φ : Q2 → Q1`. Validity over polymatroids proves containment; for the
//! decidable classes a normal counterexample is turned into a database.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use thiserror::Error;

use crate::decomposition::{
    classify, enumerate_junction_trees, et_expression, is_acyclic, is_chordal, junction_tree,
    triangulated_decomposition, DecompositionClass, TreeDecomposition,
};
use crate::inequality::{
    decide_max_with, minimal_normal_counterexample, Certificate, ConeId, DecideOptions,
    DecisionError, DecisionResult, LinearExpression, MaxInequality,
};
use crate::query::{booleanize, close_vocabulary, gaifman_graph, ConjunctiveQuery, QueryError};
use crate::structures::{
    annotate, canonical_structure, count_by_backtracking, count_with_decomposition,
    enumerate_homomorphisms_capped, induce_database, materialize_normal, HomError,
    NormalRelationSpec, VRelation, DEFAULT_NODE_CAP,
};
use crate::varset::VarSet;
use crate::Rational;

/// Tunables for [`decide_containment`].
#[derive(Clone, Debug)]
pub struct PipelineConfig {
    /// Largest witness relation materialized for verification, in tuples.
    pub witness_size_cap: u64,
    /// Node-expansion cap for homomorphism enumeration and counting.
    pub hom_node_cap: u64,
    /// Junction trees enumerated when looking for a simple one.
    pub jt_limit: usize,
    /// Close the vocabulary under projections for chordal, non-acyclic Q2.
    pub close_vocabulary: bool,
    /// Take the max over every enumerated junction tree, not just one.
    pub all_junction_trees: bool,
    /// Cap on `|hom(Q2, Q1)|`, i.e. on the number of expressions.
    pub max_homomorphisms: usize,
    pub closure_arity_cap: usize,
    pub closure_max_atoms: usize,
    pub decide: DecideOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            witness_size_cap: 4096,
            hom_node_cap: DEFAULT_NODE_CAP,
            jt_limit: crate::decomposition::DEFAULT_JT_LIMIT,
            close_vocabulary: true,
            all_junction_trees: false,
            max_homomorphisms: 100_000,
            closure_arity_cap: 8,
            closure_max_atoms: 4096,
            decide: DecideOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Contained,
    NotContained,
    Unknown,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Contained => "contained",
            Outcome::NotContained => "not-contained",
            Outcome::Unknown => "unknown",
        }
    }
}

/// Why a verdict is [`Outcome::Unknown`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnknownReason {
    /// Q2 is outside the classes where the inequality is also necessary.
    OutsideDecidableClass,
    /// A counterexample exists but no database realizing it was verified.
    NotRealizable,
    /// A size or node cap was hit.
    ResourceCap(String),
    /// Normal and polymatroid cones disagreed where they must agree.
    InternalDisagreement,
}

impl UnknownReason {
    pub fn code(&self) -> &'static str {
        match self {
            UnknownReason::OutsideDecidableClass => "outside-decidable-class",
            UnknownReason::NotRealizable => "counterexample-not-realizable",
            UnknownReason::ResourceCap(_) => "resource-cap",
            UnknownReason::InternalDisagreement => "internal-disagreement",
        }
    }

    pub fn detail(&self) -> String {
        match self {
            UnknownReason::ResourceCap(s) => s.clone(),
            other => other.code().to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessSource {
    /// The canonical database of Q1 (no homomorphism Q2 → Q1).
    CanonicalDatabase,
    /// Materialized from a normal-cone counterexample.
    NormalCounterexample,
    ProductSearch,
    NormalSearch,
}

impl WitnessSource {
    pub fn name(self) -> &'static str {
        match self {
            WitnessSource::CanonicalDatabase => "canonical-database",
            WitnessSource::NormalCounterexample => "normal-counterexample",
            WitnessSource::ProductSearch => "product-search",
            WitnessSource::NormalSearch => "normal-search",
        }
    }
}

/// A relation `P` over `vars(Q1)` meant to satisfy
/// `|P| > |hom(Q2, Π_{Q1}(P))|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub source: WitnessSource,
    /// `None` when the relation was too large to materialize.
    pub relation: Option<VRelation>,
    pub spec: Option<NormalRelationSpec>,
    /// Values were tagged per column before inducing the database.
    pub annotated: bool,
    /// `|P| > homs` was checked with exact integers.
    pub verified: bool,
    /// `|P|` (for an unmaterialized normal relation, `2^m`).
    pub size: u128,
    pub homs: Option<u128>,
}

#[derive(Clone, Debug)]
pub struct ContainmentVerdict {
    pub outcome: Outcome,
    /// Shape of Q2 as seen through the decomposition used.
    pub class: DecompositionClass,
    /// The preprocessed (Boolean, possibly closed) pair.
    pub q1: ConjunctiveQuery,
    pub q2: ConjunctiveQuery,
    pub decomposition: Option<TreeDecomposition>,
    pub homomorphisms: usize,
    pub inequality: Option<MaxInequality>,
    pub certificate: Option<Certificate>,
    /// Set when both cones were decided on the inequality.
    pub cones_agree: Option<bool>,
    pub witness: Option<Witness>,
    pub reason: Option<UnknownReason>,
    pub timings: Vec<(&'static str, Duration)>,
}

#[derive(Debug, Error)]
pub enum ContainmentError {
    #[error(transparent)]
    Query(#[from] QueryError),
}

/// `(E_T ∘ φ) − h(vars(Q1))` for every tree and homomorphism.
pub fn containment_expressions(
    n1: usize,
    n2: usize,
    trees: &[TreeDecomposition],
    homs: &[Vec<u32>],
) -> Vec<LinearExpression> {
    let top = LinearExpression::from_ints(n1, &[(VarSet::full(n1), 1)]);
    let mut out = Vec::with_capacity(trees.len() * homs.len());
    for t in trees {
        let et = et_expression(t, n2);
        for phi in homs {
            let phi: Vec<usize> = phi.iter().map(|&v| v as usize).collect();
            let mut e = et.substitute(&phi, n1);
            e.add_scaled(&top, &-Rational::one());
            out.push(e);
        }
    }
    out
}

/// `0 ≤ max_φ ((E_T ∘ φ)(h) − h(vars(Q1)))`, with the homomorphisms
/// `Q2 → Q1` enumerated up to `limit`. Returns the inequality and the
/// number of homomorphisms.
pub fn build_containment_inequality(
    q1: &ConjunctiveQuery,
    q2: &ConjunctiveQuery,
    t: &TreeDecomposition,
    limit: usize,
) -> Result<(MaxInequality, usize), HomError> {
    let homs = enumerate_homomorphisms_capped(
        &canonical_structure(q2),
        &canonical_structure(q1),
        Some(limit),
        DEFAULT_NODE_CAP,
    )?;
    let exprs =
        containment_expressions(q1.num_vars(), q2.num_vars(), std::slice::from_ref(t), &homs);
    Ok((MaxInequality::with_names(q1.var_names(), exprs), homs.len()))
}

/// Counts `|hom(Q2, Π_{Q1}(P))|` with Q2's decomposition computed once.
struct Verifier<'a> {
    q1: &'a ConjunctiveQuery,
    q2: &'a ConjunctiveQuery,
    td: Option<TreeDecomposition>,
    node_cap: u64,
}

impl<'a> Verifier<'a> {
    fn new(q1: &'a ConjunctiveQuery, q2: &'a ConjunctiveQuery, node_cap: u64) -> Self {
        let td = junction_tree(q2)
            .or_else(|_| triangulated_decomposition(q2))
            .ok();
        Verifier {
            q1,
            q2,
            td,
            node_cap,
        }
    }

    /// `Some(homs)` when counting finished.
    fn homs(&self, p: &VRelation) -> Option<u128> {
        let d = induce_database(self.q1, p).ok()?;
        if self.q2.atoms().is_empty() {
            return Some(1);
        }
        match &self.td {
            Some(t) => count_with_decomposition(self.q2, &d, t, self.node_cap).ok(),
            None => count_by_backtracking(&canonical_structure(self.q2), &d, self.node_cap).ok(),
        }
    }

    /// Check `P`, then its column-annotated variant.
    fn check(
        &self,
        p: VRelation,
        source: WitnessSource,
        spec: Option<NormalRelationSpec>,
    ) -> Option<Witness> {
        let size = p.len() as u128;
        for annotated in [false, true] {
            let cand = if annotated { annotate(&p) } else { p.clone() };
            if let Some(h) = self.homs(&cand) {
                if size > h {
                    return Some(Witness {
                        source,
                        relation: Some(cand),
                        spec: spec.clone(),
                        annotated,
                        verified: true,
                        size,
                        homs: Some(h),
                    });
                }
            }
        }
        None
    }
}

fn floor_log2(x: u64) -> u64 {
    63 - x.max(1).leading_zeros() as u64
}

/// Turn nonnegative step weights into a normal relation and verify it.
///
/// Weights are cleared of denominators, then scaled by `t = 1, 2, ...`
/// while `2^m` stays within the witness cap. If nothing verifies, the
/// factor list scaled by `⌈log2 |hom(Q2,Q1)|⌉ + 1` is returned unverified.
pub fn counterexample_to_witness(
    weights: &[(VarSet, Rational)],
    q1: &ConjunctiveQuery,
    q2: &ConjunctiveQuery,
    hom_count: usize,
    cfg: &PipelineConfig,
) -> Witness {
    let names = q1.var_names();
    let lcm = weights
        .iter()
        .fold(BigInt::one(), |acc, (_, c)| acc.lcm(c.denom()));
    let ints: Option<Vec<(VarSet, u32)>> = weights
        .iter()
        .map(|(w, c)| {
            (c * Rational::from_integer(lcm.clone()))
                .to_integer()
                .to_u32()
                .map(|k| (*w, k))
        })
        .filter(|r| r.is_none_or(|(_, k)| k > 0))
        .collect();
    let delta = (usize::BITS - hom_count.max(1).saturating_sub(1).leading_zeros()) as u64 + 1;
    let unverified = |ints: &[(VarSet, u32)], m: u64| Witness {
        source: WitnessSource::NormalCounterexample,
        relation: None,
        spec: NormalRelationSpec::new(
            names.clone(),
            ints.iter()
                .map(|&(w, k)| (w, k.saturating_mul(delta as u32)))
                .collect(),
        )
        .ok(),
        annotated: false,
        verified: false,
        size: if m < 128 { 1u128 << m } else { u128::MAX },
        homs: None,
    };
    let Some(ints) = ints else {
        return Witness {
            source: WitnessSource::NormalCounterexample,
            relation: None,
            spec: None,
            annotated: false,
            verified: false,
            size: u128::MAX,
            homs: None,
        };
    };
    let base: u64 = ints.iter().map(|&(_, k)| k as u64).sum();
    let factor_cap = floor_log2(cfg.witness_size_cap).min(30);
    let verifier = Verifier::new(q1, q2, cfg.hom_node_cap);
    let mut t = 1u64;
    while base > 0 && t * base <= factor_cap {
        let scaled: Vec<(VarSet, u32)> = ints.iter().map(|&(w, k)| (w, k * t as u32)).collect();
        if let Ok(spec) = NormalRelationSpec::new(names.clone(), scaled) {
            if let Ok(p) = materialize_normal(&spec, factor_cap) {
                if let Some(w) = verifier.check(p, WitnessSource::NormalCounterexample, Some(spec))
                {
                    return w;
                }
            }
        }
        t += 1;
    }
    unverified(&ints, base.saturating_mul(delta))
}

fn canonical_witness(
    q1: &ConjunctiveQuery,
    q2: &ConjunctiveQuery,
    cfg: &PipelineConfig,
) -> Witness {
    let p = VRelation::from_rows(q1.var_names(), [(1..=q1.num_vars() as u32).collect()])
        .expect("distinct names");
    let homs = Verifier::new(q1, q2, cfg.hom_node_cap).homs(&p);
    Witness {
        source: WitnessSource::CanonicalDatabase,
        relation: Some(p),
        spec: None,
        annotated: false,
        verified: homs == Some(0),
        size: 1,
        homs,
    }
}

struct Run {
    timings: Vec<(&'static str, Duration)>,
    clock: Instant,
}

impl Run {
    fn lap(&mut self, stage: &'static str) {
        let now = Instant::now();
        self.timings.push((stage, now - self.clock));
        self.clock = now;
    }
}

/// Decide `Q1 ⪯ Q2` (bag-set semantics).
///
/// Polymatroid validity proves containment for any Q2. Refutation relies
/// on the normal cone: for chordal Q2 with a simple junction tree and for
/// acyclic Q2 an invalid inequality means non-containment. Elsewhere only
/// a directly verified witness refutes; otherwise the verdict is Unknown.
pub fn decide_containment(
    q1: &ConjunctiveQuery,
    q2: &ConjunctiveQuery,
    cfg: &PipelineConfig,
) -> Result<ContainmentVerdict, ContainmentError> {
    let mut run = Run {
        timings: Vec::new(),
        clock: Instant::now(),
    };
    let (b1, b2) = booleanize(q1, q2)?;
    let (chordal, _) = is_chordal(&gaifman_graph(&b2));
    let acyclic = is_acyclic(&b2);
    let (c1, c2) = if cfg.close_vocabulary && chordal && !acyclic {
        match close_vocabulary(&b1, &b2, cfg.closure_arity_cap, cfg.closure_max_atoms) {
            Ok(pair) => pair,
            Err(_) => (b1.clone(), b2.clone()),
        }
    } else {
        (b1.clone(), b2.clone())
    };
    run.lap("preprocess");

    let mut verdict = ContainmentVerdict {
        outcome: Outcome::Unknown,
        class: DecompositionClass {
            chordal,
            acyclic,
            simple: false,
            totally_disconnected: false,
        },
        q1: b1.clone(),
        q2: b2.clone(),
        decomposition: None,
        homomorphisms: 0,
        inequality: None,
        certificate: None,
        cones_agree: None,
        witness: None,
        reason: None,
        timings: Vec::new(),
    };
    let finish = |mut v: ContainmentVerdict, run: Run| {
        v.timings = run.timings;
        Ok(v)
    };

    let homs = match enumerate_homomorphisms_capped(
        &canonical_structure(&c2),
        &canonical_structure(&c1),
        Some(cfg.max_homomorphisms),
        cfg.hom_node_cap,
    ) {
        Ok(h) => h,
        Err(e) => {
            verdict.reason = Some(UnknownReason::ResourceCap(e.to_string()));
            run.lap("homomorphisms");
            return finish(verdict, run);
        }
    };
    verdict.homomorphisms = homs.len();
    run.lap("homomorphisms");
    if homs.is_empty() {
        verdict.outcome = Outcome::NotContained;
        verdict.witness = Some(canonical_witness(&b1, &b2, cfg));
        run.lap("witness");
        return finish(verdict, run);
    }

    // decompositions of Q2
    let atoms = c2.atom_sets();
    let trees: Vec<TreeDecomposition> = if chordal {
        let all = enumerate_junction_trees(&c2, cfg.jt_limit.max(1)).unwrap_or_default();
        let all = if all.is_empty() {
            junction_tree(&c2).into_iter().collect()
        } else {
            all
        };
        if cfg.all_junction_trees {
            all
        } else {
            let pick = all
                .iter()
                .position(|t| classify(t, &atoms).simple)
                .unwrap_or(0);
            all.into_iter().skip(pick).take(1).collect()
        }
    } else {
        vec![triangulated_decomposition(&c2)
            .unwrap_or_else(|_| TreeDecomposition::trivial(c2.num_vars()))]
    };
    let Some(first) = trees.first().cloned() else {
        verdict.reason = Some(UnknownReason::ResourceCap("no decomposition".into()));
        return finish(verdict, run);
    };
    let simple = trees.iter().all(|t| classify(t, &atoms).simple);
    let mut class = classify(&first, &atoms);
    class.simple = simple;
    class.chordal = chordal;
    class.acyclic = acyclic;
    verdict.class = class;
    verdict.decomposition = Some(first);
    run.lap("decomposition");

    let ineq = MaxInequality::with_names(
        c1.var_names(),
        containment_expressions(c1.num_vars(), c2.num_vars(), &trees, &homs),
    );
    verdict.inequality = Some(ineq.clone());
    run.lap("inequality");

    let decide = |cone| decide_max_with(&ineq, cone, &cfg.decide);
    let poly = decide(ConeId::Polymatroid);
    run.lap("polymatroid");
    let cap_reason = |e: &DecisionError| UnknownReason::ResourceCap(e.to_string());
    if let Ok(DecisionResult::Valid(cert)) = &poly {
        verdict.outcome = Outcome::Contained;
        verdict.certificate = Some(cert.clone());
        return finish(verdict, run);
    }
    let normal = decide(ConeId::Normal);
    run.lap("normal");
    let normal_invalid = match (&poly, &normal) {
        (Ok(p), Ok(nm)) => {
            verdict.cones_agree = Some(p.is_valid() == nm.is_valid());
            !nm.is_valid()
        }
        (Err(_), Ok(DecisionResult::Valid(cert))) if chordal && simple => {
            // the cones coincide on simple inequalities
            verdict.outcome = Outcome::Contained;
            verdict.certificate = Some(cert.clone());
            return finish(verdict, run);
        }
        (_, Ok(nm)) => !nm.is_valid(),
        (_, Err(e)) => {
            verdict.reason = Some(cap_reason(e));
            return finish(verdict, run);
        }
    };

    let decidable = (chordal && simple) || acyclic;
    if chordal && simple && verdict.cones_agree == Some(false) {
        verdict.reason = Some(UnknownReason::InternalDisagreement);
        return finish(verdict, run);
    }
    if !normal_invalid {
        verdict.reason = Some(UnknownReason::OutsideDecidableClass);
        return finish(verdict, run);
    }
    let weights = match minimal_normal_counterexample(&ineq, &cfg.decide) {
        Ok(Some(w)) => w,
        Ok(None) => {
            verdict.reason = Some(UnknownReason::InternalDisagreement);
            return finish(verdict, run);
        }
        Err(e) => {
            verdict.reason = Some(cap_reason(&e));
            return finish(verdict, run);
        }
    };
    let witness = counterexample_to_witness(&weights, &b1, &b2, homs.len(), cfg);
    run.lap("witness");
    if decidable || witness.verified {
        verdict.outcome = Outcome::NotContained;
    } else {
        verdict.reason = Some(if chordal {
            UnknownReason::OutsideDecidableClass
        } else {
            UnknownReason::NotRealizable
        });
    }
    verdict.witness = Some(witness);
    finish(verdict, run)
}

/// Exhaustive search over product relations `S_1 × ... × S_n` with
/// `|S_i| ∈ [1, max_col_size]`, in shared and in disjoint value ranges.
/// Candidates are ordered by size; the first verified one is returned.
pub fn search_product_witness(
    q1: &ConjunctiveQuery,
    q2: &ConjunctiveQuery,
    max_col_size: u32,
) -> Result<Option<Witness>, ContainmentError> {
    let (b1, b2) = booleanize(q1, q2)?;
    let n = b1.num_vars();
    let max = max_col_size.max(1);
    let mut cands: Vec<(u64, bool, Vec<u32>)> = Vec::new();
    let total = (max as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
    if total > 1_000_000 {
        return Ok(None);
    }
    for code in 0..total {
        let mut c = code;
        let sizes: Vec<u32> = (0..n)
            .map(|_| {
                let s = (c % max as u64) as u32 + 1;
                c /= max as u64;
                s
            })
            .collect();
        let prod: u64 = sizes.iter().map(|&s| s as u64).product();
        cands.push((prod, false, sizes.clone()));
        cands.push((prod, true, sizes));
    }
    cands.sort();
    let names = b1.var_names();
    let verifier = Verifier::new(&b1, &b2, DEFAULT_NODE_CAP);
    Ok(cands.par_iter().find_map_first(|(_, disjoint, sizes)| {
        let mut offsets = Vec::with_capacity(n);
        let mut acc = 0;
        for &s in sizes {
            offsets.push(if *disjoint { acc } else { 0 });
            acc += s;
        }
        let mut rows: Vec<Vec<u32>> = vec![Vec::new()];
        for (&off, &s) in offsets.iter().zip(sizes) {
            rows = rows
                .iter()
                .flat_map(|r| {
                    (1..=s).map(move |v| {
                        let mut r = r.clone();
                        r.push(off + v);
                        r
                    })
                })
                .collect();
        }
        let p = VRelation::from_rows(names.clone(), rows).ok()?;
        let size = p.len() as u128;
        let h = verifier.homs(&p)?;
        (size > h).then_some(Witness {
            source: WitnessSource::ProductSearch,
            relation: Some(p),
            spec: None,
            annotated: false,
            verified: true,
            size,
            homs: Some(h),
        })
    }))
}

/// Exhaustive search over normal relations: every multiset of step sets
/// `W ⊊ V` with total multiplicity at most `max_factors`, smallest first.
pub fn search_normal_witness(
    q1: &ConjunctiveQuery,
    q2: &ConjunctiveQuery,
    max_factors: u32,
) -> Result<Option<Witness>, ContainmentError> {
    let (b1, b2) = booleanize(q1, q2)?;
    let n = b1.num_vars();
    let gens: Vec<VarSet> = VarSet::all(n).filter(|&w| w != VarSet::full(n)).collect();
    let mut cands: Vec<Vec<usize>> = vec![Vec::new()];
    let mut layer: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_factors {
        let mut next = Vec::new();
        for m in &layer {
            let from = m.last().copied().unwrap_or(0);
            for g in from..gens.len() {
                let mut m2 = m.clone();
                m2.push(g);
                next.push(m2);
            }
        }
        if cands.len() + next.len() > 2_000_000 {
            break;
        }
        cands.extend(next.iter().cloned());
        layer = next;
    }
    let names = b1.var_names();
    let verifier = Verifier::new(&b1, &b2, DEFAULT_NODE_CAP);
    Ok(cands.par_iter().find_map_first(|m| {
        let mut factors: Vec<(VarSet, u32)> = Vec::new();
        for &g in m {
            match factors.last_mut() {
                Some((w, k)) if *w == gens[g] => *k += 1,
                _ => factors.push((gens[g], 1)),
            }
        }
        let spec = NormalRelationSpec::new(names.clone(), factors).ok()?;
        let p = materialize_normal(&spec, max_factors as u64).ok()?;
        verifier.check(p, WitnessSource::NormalSearch, Some(spec))
    }))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleResult {
    Refuted(Witness),
    NoWitnessFound,
}

/// LP-free check: product search, then normal search.
pub fn brute_force_oracle(
    q1: &ConjunctiveQuery,
    q2: &ConjunctiveQuery,
    max_col_size: u32,
    max_factors: u32,
) -> Result<OracleResult, ContainmentError> {
    if let Some(w) = search_product_witness(q1, q2, max_col_size)? {
        return Ok(OracleResult::Refuted(w));
    }
    if let Some(w) = search_normal_witness(q1, q2, max_factors)? {
        return Ok(OracleResult::Refuted(w));
    }
    Ok(OracleResult::NoWitnessFound)
}

/// Re-check a witness against a query pair with exact counts.
pub fn recheck_witness(
    q1: &ConjunctiveQuery,
    q2: &ConjunctiveQuery,
    p: &VRelation,
) -> Result<Option<u128>, ContainmentError> {
    let (b1, b2) = booleanize(q1, q2)?;
    Ok(Verifier::new(&b1, &b2, DEFAULT_NODE_CAP).homs(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inequality::verify_certificate;
    use crate::query::parse_query;

    fn q(s: &str) -> ConjunctiveQuery {
        parse_query(s, None).unwrap()
    }

    #[test]
    fn vee_contained() {
        let q1 = q("Q :- R(x1,x2), R(x2,x3), R(x3,x1).");
        let q2 = q("Q :- R(y1,y2), R(y1,y3).");
        let v = decide_containment(&q1, &q2, &PipelineConfig::default()).unwrap();
        assert_eq!(v.outcome, Outcome::Contained);
        assert_eq!(v.homomorphisms, 3);
        let ineq = v.inequality.as_ref().unwrap();
        assert!(verify_certificate(ineq, v.certificate.as_ref().unwrap()));
    }

    #[test]
    fn normal_database_refuted() {
        let q1 = q("Q :- A(x1,x2), B(x1,x2), C(x1,x2), A(z1,z2), B(z1,z2), C(z1,z2).");
        let q2 = q("Q :- A(y1,y2), B(y1,y3), C(y4,y2).");
        let v = decide_containment(&q1, &q2, &PipelineConfig::default()).unwrap();
        assert_eq!(v.outcome, Outcome::NotContained);
        let w = v.witness.unwrap();
        assert!(w.verified);
        assert_eq!((w.size, w.homs), (4, Some(2)));
        assert_eq!(search_product_witness(&q1, &q2, 3).unwrap(), None);
        assert!(search_normal_witness(&q1, &q2, 2).unwrap().is_some());
    }

    #[test]
    fn no_homomorphism_uses_canonical_database() {
        let q1 = q("Q :- R(x,y).");
        let q2 = q("Q :- S(x,y).");
        let v = decide_containment(&q1, &q2, &PipelineConfig::default()).unwrap();
        assert_eq!(v.outcome, Outcome::NotContained);
        let w = v.witness.unwrap();
        assert_eq!(w.source, WitnessSource::CanonicalDatabase);
        assert!(w.verified);
        let p = search_product_witness(&q1, &q2, 1).unwrap().unwrap();
        assert_eq!(p.size, 1);
    }

    #[test]
    fn self_containment() {
        let q1 = q("Q :- R(x,y), S(y,z).");
        let v = decide_containment(&q1, &q1, &PipelineConfig::default()).unwrap();
        assert_eq!(v.outcome, Outcome::Contained);
        assert_eq!(
            brute_force_oracle(&q1, &q1, 2, 2).unwrap(),
            OracleResult::NoWitnessFound
        );
    }
}

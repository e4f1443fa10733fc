//! Building query pairs from max-linear integer inequalities.
//!
//! An inequality `0 ≤ max_i E_i` over variables `V` is turned into Boolean
//! queries `Q1, Q2` (Q2 acyclic) whose containment is equivalent to the
//! inequality over entropic functions. Two constructions are provided:
//!
//! - [`Construction::Direct`] for a single expression: one unary-style
//!   atom `S_i` per positive unit term and a chain `R_1 .. R_{q}` for
//!   `h(V) + Σ_j h(V | X_j)`, with `q` adorned copies of `V` in Q1.
//! - [`Construction::Uniform`] for any number of expressions: the
//!   expressions are first made `(n, p, n+1)`-uniform with a fresh
//!   distinguished variable `U`, which is split into `U1 U2`; a `k`-long
//!   anchor `Z` pins every chain to one sub-query.
//!
//! Queries are kept in a wide form (no variable-count limit) so large
//! constructions can still be emitted; checks that need set functions over
//! Q1 require Q1 to fit in [`MAX_VARS`] variables.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

use crate::inequality::{LinearExpression, MaxInequality};
use crate::query::{Atom, ConjunctiveQuery, QueryError};
use crate::structures::{
    enumerate_homomorphisms_capped, HomError, RelationalStructure, DEFAULT_NODE_CAP,
};
use crate::varset::{VarSet, MAX_VARS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error("coefficient {0} is not an integer")]
    NonInteger(String),
    #[error("instance has no variables")]
    NoVariables,
    #[error("instance has no expressions")]
    NoExpressions,
    #[error("instance exceeds caps: {exprs} expressions (cap {max_exprs}), {vars} variables (cap {max_vars})")]
    TooLarge {
        exprs: usize,
        vars: usize,
        max_exprs: usize,
        max_vars: usize,
    },
    #[error("the direct construction needs exactly one expression, got {0}")]
    DirectNeedsOneExpression(usize),
    #[error("Q1 has {0} variables; checks over set functions support at most {MAX_VARS}")]
    TooWide(usize),
    #[error(transparent)]
    Hom(#[from] HomError),
    #[error(transparent)]
    Query(#[from] QueryError),
}

/// `0 ≤ max_i E_i` with integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MiipInstance {
    names: Vec<String>,
    exprs: Vec<LinearExpression>,
}

impl MiipInstance {
    pub fn new(
        names: Vec<String>,
        exprs: Vec<LinearExpression>,
    ) -> Result<MiipInstance, ReductionError> {
        if names.is_empty() {
            return Err(ReductionError::NoVariables);
        }
        if exprs.is_empty() {
            return Err(ReductionError::NoExpressions);
        }
        for e in &exprs {
            if let Some(c) = e.coeffs().values().find(|c| !c.is_integer()) {
                return Err(ReductionError::NonInteger(c.to_string()));
            }
        }
        Ok(MiipInstance { names, exprs })
    }

    pub fn from_inequality(m: &MaxInequality) -> Result<MiipInstance, ReductionError> {
        MiipInstance::new(m.names().to_vec(), m.exprs().to_vec())
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn exprs(&self) -> &[LinearExpression] {
        &self.exprs
    }

    pub fn to_inequality(&self) -> MaxInequality {
        MaxInequality::with_names(self.names.clone(), self.exprs.clone())
    }

    pub fn check_caps(&self, max_exprs: usize, max_vars: usize) -> Result<(), ReductionError> {
        if self.exprs.len() > max_exprs || self.n() > max_vars {
            return Err(ReductionError::TooLarge {
                exprs: self.exprs.len(),
                vars: self.n(),
                max_exprs,
                max_vars,
            });
        }
        Ok(())
    }
}

/// Default instance caps.
pub const DEFAULT_MAX_EXPRS: usize = 4;
pub const DEFAULT_MAX_VARS: usize = 4;

/// `E = Σ_i h(Y_i) − Σ_j h(X_j)` split into unit terms, written as
/// `q·h(V) ≤ Σ_i h(Y_i) + h(V) + Σ_j h(V | X_j)` with `q = #negatives + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainForm {
    n: usize,
    pub positives: Vec<VarSet>,
    pub negatives: Vec<VarSet>,
}

impl ChainForm {
    pub fn q(&self) -> usize {
        self.negatives.len() + 1
    }

    /// Right-hand-side terms `(Y, X)` meaning `h(Y | X)`, in order:
    /// positives, then `h(V | ∅)`, then `h(V | X_j)`.
    pub fn terms(&self) -> Vec<(VarSet, VarSet)> {
        let v = VarSet::full(self.n);
        let mut t: Vec<(VarSet, VarSet)> =
            self.positives.iter().map(|&y| (y, VarSet::EMPTY)).collect();
        t.push((v, VarSet::EMPTY));
        t.extend(self.negatives.iter().map(|&x| (v, x)));
        t
    }

    pub fn rhs(&self) -> LinearExpression {
        let mut e = LinearExpression::zero(self.n);
        for (y, x) in self.terms() {
            e.add_conditional(y, x, &crate::rat(1));
        }
        e
    }

    /// `rhs − q·h(V)`, equal to the original expression.
    pub fn expression(&self) -> LinearExpression {
        let mut e = self.rhs();
        e.add_term(VarSet::full(self.n), &crate::rat(-(self.q() as i64)));
        e
    }
}

fn unit_terms(e: &LinearExpression) -> (Vec<VarSet>, Vec<VarSet>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (&x, c) in e.coeffs() {
        let k = c
            .abs()
            .to_integer()
            .to_usize()
            .expect("integer coefficient");
        let side = if c.is_positive() { &mut pos } else { &mut neg };
        side.extend(std::iter::repeat_n(x, k));
    }
    (pos, neg)
}

/// Split an integer expression into its chain form.
pub fn rewrite(e: &LinearExpression) -> ChainForm {
    let (positives, negatives) = unit_terms(e);
    ChainForm {
        n: e.n(),
        positives,
        negatives,
    }
}

/// `(n, p, q)`-uniform instance over `V ∪ {U}` (`U` has index `|V|`):
/// every expression is `n·h(U) + Σ_{j=0..p} h(Y_j | X_j)`, compared with
/// `q·h(UV)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniformMiip {
    pub base_names: Vec<String>,
    pub u_name: String,
    pub n_count: usize,
    pub p_count: usize,
    pub q_count: usize,
    /// Per expression, `p + 1` pairs `(Y_j, X_j)`.
    pub chains: Vec<Vec<(VarSet, VarSet)>>,
}

impl UniformMiip {
    /// Index of the distinguished variable.
    pub fn u(&self) -> usize {
        self.base_names.len()
    }

    pub fn width(&self) -> usize {
        self.base_names.len() + 1
    }

    pub fn names(&self) -> Vec<String> {
        let mut v = self.base_names.clone();
        v.push(self.u_name.clone());
        v
    }

    /// `n·h(U) + Σ_j h(Y_j | X_j)` for expression `i`.
    pub fn rhs(&self, i: usize) -> LinearExpression {
        let w = self.width();
        let mut e = LinearExpression::zero(w);
        e.add_term(
            VarSet::singleton(self.u()),
            &crate::rat(self.n_count as i64),
        );
        for &(y, x) in &self.chains[i] {
            e.add_conditional(y, x, &crate::rat(1));
        }
        e
    }

    /// `rhs − q·h(UV)`.
    pub fn expression(&self, i: usize) -> LinearExpression {
        let mut e = self.rhs(i);
        e.add_term(
            VarSet::full(self.width()),
            &crate::rat(-(self.q_count as i64)),
        );
        e
    }

    /// Chain condition and connectedness.
    pub fn is_well_formed(&self) -> bool {
        let u = VarSet::singleton(self.u());
        self.chains.iter().all(|c| {
            c.len() == self.p_count + 1
                && c[0].1.is_empty()
                && (1..c.len()).all(|j| {
                    let (y, x) = c[j];
                    x.is_subset(c[j - 1].0.intersection(y)) && u.is_subset(x)
                })
        })
    }
}

fn fresh_name(base: &str, taken: &[String]) -> String {
    let mut s = base.to_string();
    while taken.contains(&s) {
        s.push('\'');
    }
    s
}

/// Make every expression `(n, p, n+1)`-uniform with a fresh `U`.
pub fn uniformize(m: &MiipInstance) -> UniformMiip {
    let nb = m.n();
    let v = VarSet::full(nb);
    let u = VarSet::singleton(nb);
    let uv = v.with(nb);
    let forms: Vec<ChainForm> = m.exprs.iter().map(rewrite).collect();
    let n = forms.iter().map(|f| f.negatives.len()).max().unwrap_or(0);
    let mut chains: Vec<Vec<(VarSet, VarSet)>> = forms
        .iter()
        .map(|f| {
            let mut c = vec![(u, VarSet::EMPTY)];
            c.extend(f.positives.iter().map(|&y| (y.union(u), u)));
            c.extend(std::iter::repeat_n((uv, u), n - f.negatives.len()));
            c.push((uv, u));
            c.extend(f.negatives.iter().map(|&x| (uv, x.union(u))));
            c
        })
        .collect();
    let p = chains.iter().map(|c| c.len() - 1).max().unwrap_or(0);
    for c in chains.iter_mut() {
        while c.len() < p + 1 {
            c.push((u, u));
        }
    }
    UniformMiip {
        base_names: m.names.clone(),
        u_name: fresh_name("U", &m.names),
        n_count: n,
        p_count: p,
        q_count: n + 1,
        chains,
    }
}

/// A Boolean query without a variable-count limit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WideQuery {
    pub name: String,
    pub vars: Vec<String>,
    pub atoms: Vec<(String, Vec<usize>)>,
}

impl WideQuery {
    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    /// Query-grammar text, `Q :- R(a,b), ... .`
    pub fn to_text(&self) -> String {
        let atoms: Vec<String> = self
            .atoms
            .iter()
            .map(|(r, args)| {
                let a: Vec<&str> = args.iter().map(|&v| self.vars[v].as_str()).collect();
                format!("{r}({})", a.join(","))
            })
            .collect();
        format!("{} :- {}.", self.name, atoms.join(", "))
    }

    /// Convert to a [`ConjunctiveQuery`] (at most [`MAX_VARS`] variables).
    pub fn to_query(&self) -> Result<ConjunctiveQuery, QueryError> {
        let atoms = self
            .atoms
            .iter()
            .map(|(r, a)| Atom::new(r.clone(), a.clone()))
            .collect();
        ConjunctiveQuery::new(&self.name, self.vars.clone(), atoms, Vec::new(), MAX_VARS)
    }

    pub fn structure(&self) -> RelationalStructure {
        let mut s = RelationalStructure::with_domain(self.vars.iter().cloned());
        for (r, args) in &self.atoms {
            s.add_tuple(r, args.iter().map(|&v| v as u32).collect())
                .expect("consistent arities");
        }
        s
    }

    /// GYO reduction over the atoms' variable sets.
    pub fn is_acyclic(&self) -> bool {
        let mut edges: Vec<BTreeSet<usize>> = self
            .atoms
            .iter()
            .map(|(_, a)| a.iter().copied().collect())
            .collect();
        loop {
            let mut changed = false;
            let mut count: HashMap<usize, usize> = HashMap::new();
            for e in &edges {
                for &v in e {
                    *count.entry(v).or_insert(0) += 1;
                }
            }
            for e in edges.iter_mut() {
                let before = e.len();
                e.retain(|v| count[v] > 1);
                changed |= e.len() != before;
            }
            edges.retain(|e| !e.is_empty());
            let mut i = 0;
            while i < edges.len() {
                let absorbed = (0..edges.len()).any(|j| {
                    j != i && edges[i].is_subset(&edges[j]) && (edges[i] != edges[j] || j < i)
                });
                if absorbed {
                    edges.remove(i);
                    changed = true;
                } else {
                    i += 1;
                }
            }
            if edges.is_empty() {
                return true;
            }
            if !changed {
                return false;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Construction {
    Direct,
    Uniform,
}

impl Construction {
    pub fn name(self) -> &'static str {
        match self {
            Construction::Direct => "direct",
            Construction::Uniform => "uniform",
        }
    }
}

/// Deliberate defects for negative tests of [`verify_built`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    /// Put `U1` where `Ẑ_i` has its `U2` anchor.
    DropAnchor,
    /// Identify `U2` with `U1` throughout Q1.
    MergeU,
}

/// Where a Q2 variable comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Q2Origin {
    /// Copy of base variable `base` for expression `expr`, chain term `term`.
    Block {
        base: usize,
        expr: usize,
        term: usize,
    },
    /// Copy of base variable `base` in positive term `term` (direct).
    Positive { base: usize, term: usize },
    /// Half (`1` or `2`) of the `U` pair of atom `S_s`.
    Anchor { half: u8, s: usize },
    /// Anchor position `expr` of `Z̃`.
    Z { expr: usize },
}

/// The two queries of a reduction plus the bookkeeping needed to check it.
#[derive(Clone, Debug)]
pub struct BuiltReduction {
    pub construction: Construction,
    pub q1: WideQuery,
    pub q2: WideQuery,
    /// Erasure targets: the base variables (`V`, plus `U` when uniform).
    pub base_names: Vec<String>,
    /// Base variable and adornment of each Q1 variable (`U1`, `U2` both
    /// map to `U`).
    pub q1_origin: Vec<(usize, usize)>,
    /// Sub-query label `(expr, copy)` of each distinct Q1 atom; S atoms
    /// are shared and carry every label of their copy.
    pub q1_owners: Vec<BTreeSet<(usize, usize)>>,
    pub q2_origin: Vec<Q2Origin>,
    /// The expressions `E_i` the erasures must hit (`q·h(V) ≤ max E_i`).
    pub targets: Vec<LinearExpression>,
    /// Number of adorned copies `q`.
    pub copies: usize,
    /// Q2's decomposition: bags of Q2 variable ids and parents.
    pub tree: Vec<(BTreeSet<usize>, Option<usize>)>,
    /// Indices of the Q2 atoms forming the chain.
    pub chain_atoms: Vec<usize>,
}

/// Sizes known before building.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SizeReport {
    pub construction: Construction,
    pub q1_vars: usize,
    pub q2_vars: usize,
    pub expressions: usize,
    pub copies: usize,
    pub arities: Vec<(String, usize)>,
}

impl SizeReport {
    pub fn to_text(&self) -> String {
        let ar: Vec<String> = self
            .arities
            .iter()
            .map(|(r, a)| format!("{r}/{a}"))
            .collect();
        format!(
            "construction={} expressions={} copies={} q1_vars={} q2_vars={} arities={}",
            self.construction.name(),
            self.expressions,
            self.copies,
            self.q1_vars,
            self.q2_vars,
            ar.join(",")
        )
    }
}

/// Direct for one expression, uniform otherwise.
pub fn default_construction(m: &MiipInstance) -> Construction {
    if m.exprs.len() == 1 {
        Construction::Direct
    } else {
        Construction::Uniform
    }
}

/// Expand a set over `V ∪ {U}` into Q1 base slots, `U` becoming the two
/// slots `U1`, `U2` (slot indices `|V|` and `|V|+1`).
fn expand(x: VarSet, nb: usize) -> Vec<usize> {
    let mut out: Vec<usize> = x.iter().filter(|&v| v < nb).collect();
    if x.contains(nb) {
        out.push(nb);
        out.push(nb + 1);
    }
    out
}

/// Predict sizes without building.
pub fn size_report(m: &MiipInstance, construction: Construction) -> SizeReport {
    match construction {
        Construction::Direct => {
            let f = rewrite(&m.exprs[0]);
            let nb = m.n();
            let mut arities: Vec<(String, usize)> = f
                .positives
                .iter()
                .enumerate()
                .map(|(i, y)| (format!("S_{}", i + 1), y.len()))
                .collect();
            arities.push(("R_1".into(), nb));
            arities.extend(
                f.negatives
                    .iter()
                    .enumerate()
                    .map(|(j, x)| (format!("R_{}", j + 2), x.len() + nb)),
            );
            SizeReport {
                construction,
                q1_vars: f.q() * nb,
                q2_vars: f.positives.iter().map(|y| y.len()).sum::<usize>() + f.q() * nb,
                expressions: 1,
                copies: f.q(),
                arities,
            }
        }
        Construction::Uniform => {
            let u = uniformize(m);
            let nb = m.n();
            let k = u.chains.len();
            let mut arities: Vec<(String, usize)> =
                (1..=u.n_count).map(|s| (format!("S_{s}"), 2)).collect();
            let mut q2 = 2 * u.n_count + k;
            for j in 0..=u.p_count {
                let xs: usize = u.chains.iter().map(|c| expand(c[j].1, nb).len()).sum();
                let ys: usize = u.chains.iter().map(|c| expand(c[j].0, nb).len()).sum();
                q2 += ys;
                arities.push((format!("R_{j}"), xs + ys + k));
            }
            SizeReport {
                construction,
                q1_vars: u.q_count * (nb + 2),
                q2_vars: q2,
                expressions: k,
                copies: u.q_count,
                arities,
            }
        }
    }
}

/// Renames clashing flat names by appending `'`.
fn uniquify(names: &mut [String]) {
    let mut seen = BTreeSet::new();
    for n in names.iter_mut() {
        while !seen.insert(n.clone()) {
            n.push('\'');
        }
    }
}

/// A Q1 atom: relation and argument slots.
type AtomKey = (String, Vec<usize>);

/// Build the query pair.
pub fn build_queries(
    m: &MiipInstance,
    construction: Construction,
) -> Result<BuiltReduction, ReductionError> {
    build_queries_mutated(m, construction, None)
}

/// Build the query pair, optionally with a deliberate defect in Q1.
pub fn build_queries_mutated(
    m: &MiipInstance,
    construction: Construction,
    mutation: Option<Mutation>,
) -> Result<BuiltReduction, ReductionError> {
    match construction {
        Construction::Direct => {
            if m.exprs.len() != 1 {
                return Err(ReductionError::DirectNeedsOneExpression(m.exprs.len()));
            }
            Ok(build_direct(m))
        }
        Construction::Uniform => Ok(build_uniform(&uniformize(m), mutation)),
    }
}

fn build_direct(m: &MiipInstance) -> BuiltReduction {
    let f = rewrite(&m.exprs[0]);
    let nb = m.n();
    let names = &m.names;
    let q = f.q();
    // Q1: copy ℓ of every base variable, id = ℓ·nb + v
    let mut q1_vars = Vec::new();
    let mut q1_origin = Vec::new();
    for l in 0..q {
        for v in 0..nb {
            q1_vars.push(format!("{}_a{}", names[v], l + 1));
            q1_origin.push((v, l));
        }
    }
    uniquify(&mut q1_vars);
    let id1 = |v: usize, l: usize| l * nb + v;
    let full: Vec<usize> = (0..nb).collect();
    let mut q1_atoms = Vec::new();
    let mut q1_owners = Vec::new();
    for l in 0..q {
        for (i, y) in f.positives.iter().enumerate() {
            q1_atoms.push((
                format!("S_{}", i + 1),
                y.iter().map(|v| id1(v, l)).collect(),
            ));
        }
        q1_atoms.push(("R_1".to_string(), full.iter().map(|&v| id1(v, l)).collect()));
        for (j, x) in f.negatives.iter().enumerate() {
            let args = x
                .iter()
                .chain(full.iter().copied())
                .map(|v| id1(v, l))
                .collect();
            q1_atoms.push((format!("R_{}", j + 2), args));
        }
        let per = f.positives.len() + 1 + f.negatives.len();
        q1_owners.extend(std::iter::repeat_n(BTreeSet::from([(0, l)]), per));
    }
    // Q2
    let mut q2_vars = Vec::new();
    let mut q2_origin = Vec::new();
    let mut q2_atoms = Vec::new();
    let mut tree = Vec::new();
    for (i, y) in f.positives.iter().enumerate() {
        let mut args = Vec::new();
        for v in y.iter() {
            args.push(q2_vars.len());
            q2_vars.push(format!("{}_p{}", names[v], i + 1));
            q2_origin.push(Q2Origin::Positive { base: v, term: i });
        }
        tree.push((args.iter().copied().collect(), None));
        q2_atoms.push((format!("S_{}", i + 1), args));
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut chain_atoms = Vec::new();
    for t in 0..q {
        let block: Vec<usize> = (0..nb)
            .map(|v| {
                q2_vars.push(format!("{}_t{}", names[v], t));
                q2_origin.push(Q2Origin::Block {
                    base: v,
                    expr: 0,
                    term: t,
                });
                q2_vars.len() - 1
            })
            .collect();
        let mut args: Vec<usize> = Vec::new();
        if t > 0 {
            args.extend(f.negatives[t - 1].iter().map(|v| blocks[t - 1][v]));
        }
        args.extend(block.iter().copied());
        let parent = if t == 0 { None } else { Some(tree.len() - 1) };
        tree.push((args.iter().copied().collect(), parent));
        chain_atoms.push(q2_atoms.len());
        q2_atoms.push((format!("R_{}", t + 1), args));
        blocks.push(block);
    }
    uniquify(&mut q2_vars);
    BuiltReduction {
        construction: Construction::Direct,
        q1: WideQuery {
            name: "Q1".into(),
            vars: q1_vars,
            atoms: q1_atoms,
        },
        q2: WideQuery {
            name: "Q2".into(),
            vars: q2_vars,
            atoms: q2_atoms,
        },
        base_names: names.clone(),
        q1_origin,
        q1_owners,
        q2_origin,
        targets: vec![f.rhs()],
        copies: q,
        tree,
        chain_atoms,
    }
}

fn build_uniform(u: &UniformMiip, mutation: Option<Mutation>) -> BuiltReduction {
    let nb = u.base_names.len();
    let k = u.chains.len();
    let q = u.q_count;
    let slots = nb + 2;
    let mut slot_names = u.base_names.clone();
    slot_names.push(format!("{}1", u.u_name));
    slot_names.push(format!("{}2", u.u_name));
    // Q1 variables: slot s of copy ℓ has id ℓ·slots + s
    let mut q1_vars = Vec::new();
    let mut q1_origin = Vec::new();
    for l in 0..q {
        for (s, name) in slot_names.iter().enumerate() {
            q1_vars.push(format!("{name}_a{}", l + 1));
            q1_origin.push((s.min(nb), l));
        }
    }
    uniquify(&mut q1_vars);
    let (u1, u2) = (nb, nb + 1);
    let id1 = |s: usize, l: usize| {
        let s = if mutation == Some(Mutation::MergeU) && s == u2 {
            u1
        } else {
            s
        };
        l * slots + s
    };
    let mut q1_map: BTreeMap<AtomKey, BTreeSet<(usize, usize)>> = BTreeMap::new();
    let mut q1_order: Vec<(String, Vec<usize>)> = Vec::new();
    let mut add1 = |rel: String, args: Vec<usize>, owner: (usize, usize)| {
        let key = (rel, args);
        if !q1_map.contains_key(&key) {
            q1_order.push(key.clone());
        }
        q1_map.entry(key).or_default().insert(owner);
    };
    for l in 0..q {
        for i in 0..k {
            for s in 1..=u.n_count {
                add1(format!("S_{s}"), vec![id1(u1, l), id1(u2, l)], (i, l));
            }
            for j in 0..=u.p_count {
                let mut args = Vec::new();
                for part in [1usize, 0] {
                    // part 1: X, part 0: Y
                    for (i2, c) in u.chains.iter().enumerate() {
                        let set = if part == 1 { c[j].1 } else { c[j].0 };
                        let ex = expand(set, nb);
                        if i2 == i {
                            args.extend(ex.iter().map(|&s| id1(s, l)));
                        } else {
                            args.extend(std::iter::repeat_n(id1(u1, l), ex.len()));
                        }
                    }
                }
                for i2 in 0..k {
                    let anchor = i2 == i && mutation != Some(Mutation::DropAnchor);
                    args.push(id1(if anchor { u2 } else { u1 }, l));
                }
                add1(format!("R_{j}"), args, (i, l));
            }
        }
    }
    let q1_owners: Vec<BTreeSet<(usize, usize)>> =
        q1_order.iter().map(|key| q1_map[key].clone()).collect();
    let q1_atoms = q1_order;
    // Q2
    let mut q2_vars = Vec::new();
    let mut q2_origin = Vec::new();
    let mut q2_atoms = Vec::new();
    let mut tree = Vec::new();
    for s in 1..=u.n_count {
        let mut args = Vec::new();
        for half in [1u8, 2] {
            args.push(q2_vars.len());
            q2_vars.push(format!("{}{half}_s{s}", u.u_name));
            q2_origin.push(Q2Origin::Anchor { half, s });
        }
        tree.push((args.iter().copied().collect(), None));
        q2_atoms.push((format!("S_{s}"), args));
    }
    let z: Vec<usize> = (0..k)
        .map(|i| {
            q2_vars.push(format!("Z_{}", i + 1));
            q2_origin.push(Q2Origin::Z { expr: i });
            q2_vars.len() - 1
        })
        .collect();
    // block (i, j): slot → Q2 variable
    let mut blocks: Vec<Vec<HashMap<usize, usize>>> = vec![Vec::new(); k];
    let mut chain_atoms = Vec::new();
    for j in 0..=u.p_count {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, c) in u.chains.iter().enumerate() {
            if j > 0 {
                xs.extend(expand(c[j].1, nb).iter().map(|s| blocks[i][j - 1][s]));
            }
            let mut block = HashMap::new();
            for s in expand(c[j].0, nb) {
                q2_vars.push(format!("{}_e{}_t{j}", slot_names[s], i + 1));
                q2_origin.push(Q2Origin::Block {
                    base: s.min(nb),
                    expr: i,
                    term: j,
                });
                block.insert(s, q2_vars.len() - 1);
                ys.push(q2_vars.len() - 1);
            }
            blocks[i].push(block);
        }
        let mut args = xs;
        args.extend(ys);
        args.extend(z.iter().copied());
        let parent = if j == 0 { None } else { Some(tree.len() - 1) };
        tree.push((args.iter().copied().collect(), parent));
        chain_atoms.push(q2_atoms.len());
        q2_atoms.push((format!("R_{j}"), args));
    }
    uniquify(&mut q2_vars);
    let mut base_names = u.base_names.clone();
    base_names.push(u.u_name.clone());
    BuiltReduction {
        construction: Construction::Uniform,
        q1: WideQuery {
            name: "Q1".into(),
            vars: q1_vars,
            atoms: q1_atoms,
        },
        q2: WideQuery {
            name: "Q2".into(),
            vars: q2_vars,
            atoms: q2_atoms,
        },
        base_names,
        q1_origin,
        q1_owners,
        q2_origin,
        targets: (0..k).map(|i| u.rhs(i)).collect(),
        copies: q,
        tree,
        chain_atoms,
    }
}

/// `ε(F)`: drop adornments, mapping each Q1 variable to its base.
pub fn erasure(
    f: &LinearExpression,
    q1_origin: &[(usize, usize)],
    n_base: usize,
) -> LinearExpression {
    let phi: Vec<usize> = q1_origin.iter().map(|&(b, _)| b).collect();
    f.substitute(&phi, n_base)
}

/// `E^{(ℓ)}`: adorn every variable of `e` with `ℓ`.
pub fn constant_adornment(
    e: &LinearExpression,
    q1_origin: &[(usize, usize)],
    l: usize,
) -> LinearExpression {
    let sets: Vec<VarSet> = (0..e.n())
        .map(|b| {
            VarSet::from_iter(
                q1_origin
                    .iter()
                    .enumerate()
                    .filter(|(_, &(base, copy))| base == b && copy == l)
                    .map(|(v, _)| v),
            )
        })
        .collect();
    e.substitute_sets(&sets, q1_origin.len())
}

impl BuiltReduction {
    /// `E_T ∘ φ` over Q1's variables.
    pub fn et_composed(&self, phi: &[u32]) -> LinearExpression {
        let n1 = self.q1.num_vars();
        let image = |s: &BTreeSet<usize>| VarSet::from_iter(s.iter().map(|&v| phi[v] as usize));
        let mut e = LinearExpression::zero(n1);
        for (bag, parent) in &self.tree {
            let b = image(bag);
            let sep = match parent {
                Some(p) => image(&bag.intersection(&self.tree[*p].0).copied().collect()),
                None => VarSet::EMPTY,
            };
            e.add_conditional(b, sep, &crate::rat(1));
        }
        e
    }

    /// Query-grammar text of both queries.
    pub fn queries_text(&self) -> String {
        format!("{}\n{}\n", self.q1.to_text(), self.q2.to_text())
    }

    /// One line per variable mapping the flat name to its origin.
    pub fn manifest(&self) -> String {
        let mut s = format!(
            "construction={} copies={}\n",
            self.construction.name(),
            self.copies
        );
        for (v, &(b, l)) in self.q1_origin.iter().enumerate() {
            let _ = writeln!(
                s,
                "q1 {} base={} adornment={}",
                self.q1.vars[v],
                self.base_names[b],
                l + 1
            );
        }
        for (v, o) in self.q2_origin.iter().enumerate() {
            let origin = match o {
                Q2Origin::Block { base, expr, term } => {
                    format!(
                        "base={} expr={} term={}",
                        self.base_names[*base],
                        expr + 1,
                        term
                    )
                }
                Q2Origin::Positive { base, term } => {
                    format!("base={} positive={}", self.base_names[*base], term + 1)
                }
                Q2Origin::Anchor { half, s } => format!("anchor=S_{s} half={half}"),
                Q2Origin::Z { expr } => format!("z={}", expr + 1),
            };
            let _ = writeln!(s, "q2 {} {origin}", self.q2.vars[v]);
        }
        s
    }

    /// Running intersection and atom coverage of the chain decomposition.
    pub fn tree_is_valid(&self) -> bool {
        let covers = self.q2.atoms.iter().all(|(_, a)| {
            self.tree
                .iter()
                .any(|(b, _)| a.iter().all(|v| b.contains(v)))
        });
        let connected = (0..self.q2.num_vars()).all(|v| {
            let holding: Vec<usize> = (0..self.tree.len())
                .filter(|&t| self.tree[t].0.contains(&v))
                .collect();
            // every holder except the topmost has its parent holding v too
            holding
                .iter()
                .filter(|&&t| !matches!(self.tree[t].1, Some(p) if self.tree[p].0.contains(&v)))
                .count()
                <= 1
        });
        covers && connected
    }
}

/// Outcome of [`verify_built`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionCheck {
    pub homomorphisms: usize,
    pub q2_acyclic: bool,
    pub tree_valid: bool,
    /// Condition (a): every erasure is some target.
    pub erasures_ok: bool,
    /// A homomorphism whose erasure is not a target.
    pub offending: Option<Vec<u32>>,
    /// Condition (b): constant adornments found, out of `targets × copies`.
    pub adornments_found: usize,
    pub adornments_needed: usize,
    pub missing: Vec<(usize, usize)>,
    /// Every homomorphism sends the whole chain into one sub-query.
    pub chains_anchored: bool,
}

impl ReductionCheck {
    pub fn passes(&self) -> bool {
        self.q2_acyclic && self.tree_valid && self.erasures_ok && self.missing.is_empty()
    }

    pub fn to_text(&self) -> String {
        let phi = self
            .offending
            .as_ref()
            .map(|p| p.iter().map(u32::to_string).collect::<Vec<_>>().join(","))
            .unwrap_or_default();
        format!(
            "homomorphisms={}\nq2_acyclic={}\ntree_valid={}\ncondition_a={}\noffending_phi={}\ncondition_b={}\nadornments={}/{}\nchains_anchored={}\npasses={}\n",
            self.homomorphisms,
            self.q2_acyclic,
            self.tree_valid,
            self.erasures_ok,
            phi,
            self.missing.is_empty(),
            self.adornments_found,
            self.adornments_needed,
            self.chains_anchored,
            self.passes()
        )
    }
}

/// Symbolically check conditions (a) and (b) on a built pair.
pub fn verify_built(b: &BuiltReduction, max_homs: usize) -> Result<ReductionCheck, ReductionError> {
    let n1 = b.q1.num_vars();
    if n1 > MAX_VARS {
        return Err(ReductionError::TooWide(n1));
    }
    let homs = enumerate_homomorphisms_capped(
        &b.q2.structure(),
        &b.q1.structure(),
        Some(max_homs),
        DEFAULT_NODE_CAP,
    )?;
    let nb = b.base_names.len();
    let mut needed: BTreeMap<(usize, usize), LinearExpression> = BTreeMap::new();
    for (i, t) in b.targets.iter().enumerate() {
        for l in 0..b.copies {
            needed.insert((i, l), constant_adornment(t, &b.q1_origin, l));
        }
    }
    let q1_index: HashMap<(&str, Vec<usize>), usize> =
        b.q1.atoms
            .iter()
            .enumerate()
            .map(|(a, (r, args))| ((r.as_str(), args.clone()), a))
            .collect();
    let mut offending = None;
    let mut anchored = true;
    let mut found = BTreeSet::new();
    for phi in &homs {
        let f = b.et_composed(phi);
        let eps = erasure(&f, &b.q1_origin, nb);
        if offending.is_none() && !b.targets.contains(&eps) {
            offending = Some(phi.clone());
        }
        for (key, e) in &needed {
            if *e == f {
                found.insert(*key);
            }
        }
        // the chain lands in a single sub-query
        let mut common: Option<BTreeSet<(usize, usize)>> = None;
        for &a in &b.chain_atoms {
            let (r, args) = &b.q2.atoms[a];
            let img: Vec<usize> = args.iter().map(|&v| phi[v] as usize).collect();
            let owners = q1_index
                .get(&(r.as_str(), img))
                .map(|&i| b.q1_owners[i].clone())
                .unwrap_or_default();
            common = Some(match common {
                None => owners,
                Some(c) => c.intersection(&owners).copied().collect(),
            });
        }
        if common.is_some_and(|c| c.is_empty()) {
            anchored = false;
        }
    }
    let missing: Vec<(usize, usize)> = needed
        .keys()
        .filter(|k| !found.contains(k))
        .copied()
        .collect();
    Ok(ReductionCheck {
        homomorphisms: homs.len(),
        q2_acyclic: b.q2.is_acyclic(),
        tree_valid: b.tree_is_valid(),
        erasures_ok: offending.is_none(),
        offending,
        adornments_found: found.len(),
        adornments_needed: needed.len(),
        missing,
        chains_anchored: anchored,
    })
}

/// Build with the default construction and check it.
pub fn verify_reduction(m: &MiipInstance) -> Result<ReductionCheck, ReductionError> {
    let b = build_queries(m, default_construction(m))?;
    verify_built(&b, 1_000_000)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inequality::parse_inequality;

    fn iti() -> MiipInstance {
        let m = parse_inequality("0 <= h(X1) + 2 h(X2) + h(X3) - h(X1,X2) - h(X2,X3)").unwrap();
        MiipInstance::from_inequality(&m).unwrap()
    }

    fn vs(v: &[usize]) -> VarSet {
        VarSet::from_iter(v.iter().copied())
    }

    #[test]
    fn chain_form_of_iti() {
        let m = iti();
        let f = rewrite(&m.exprs()[0]);
        assert_eq!(f.q(), 3);
        let v = VarSet::full(3);
        assert_eq!(
            f.terms(),
            vec![
                (vs(&[0]), VarSet::EMPTY),
                (vs(&[1]), VarSet::EMPTY),
                (vs(&[1]), VarSet::EMPTY),
                (vs(&[2]), VarSet::EMPTY),
                (v, VarSet::EMPTY),
                (v, vs(&[0, 1])),
                (v, vs(&[1, 2])),
            ]
        );
        assert_eq!(f.expression(), m.exprs()[0]);
    }

    #[test]
    fn uniform_shape() {
        let m = iti();
        let u = uniformize(&m);
        assert_eq!((u.n_count, u.q_count), (2, 3));
        assert!(u.is_well_formed());
        assert_eq!(u.chains[0].len(), u.p_count + 1);
        // constant U recovers the original expression
        let e = u.expression(0);
        let back = e.substitute_sets(&[vs(&[0]), vs(&[1]), vs(&[2]), VarSet::EMPTY], 3);
        assert_eq!(back, m.exprs()[0]);
    }

    #[test]
    fn direct_chain_inequality_instance() {
        let b = build_queries(&iti(), Construction::Direct).unwrap();
        assert_eq!(b.q1.num_vars(), 9);
        assert_eq!(b.q2.num_vars(), 13);
        assert!(b.q2.is_acyclic());
        let check = verify_built(&b, 10_000).unwrap();
        assert_eq!(check.homomorphisms, 243);
        assert!(check.passes(), "{}", check.to_text());
        assert!(check.chains_anchored);
        assert_eq!(check.adornments_found, 3);
        let r = size_report(&iti(), Construction::Direct);
        assert_eq!((r.q1_vars, r.q2_vars), (9, 13));
    }

    #[test]
    fn erasure_inverts_adornment() {
        let b = build_queries(&iti(), Construction::Direct).unwrap();
        let e = &b.targets[0];
        for l in 0..b.copies {
            let a = constant_adornment(e, &b.q1_origin, l);
            assert_eq!(&erasure(&a, &b.q1_origin, 3), e);
        }
    }

    #[test]
    fn uniform_chain_inequality_instance() {
        let m = iti();
        let b = build_queries(&m, Construction::Uniform).unwrap();
        let r = size_report(&m, Construction::Uniform);
        assert_eq!((b.q1.num_vars(), b.q2.num_vars()), (r.q1_vars, r.q2_vars));
        assert!(b.q2.num_vars() > MAX_VARS);
        assert!(b.q2.to_query().is_err());
        let check = verify_built(&b, 100_000).unwrap();
        assert!(check.passes(), "{}", check.to_text());
        assert!(check.chains_anchored);
        assert_eq!(check.homomorphisms, 27);
    }

    #[test]
    fn uniform_two_expressions_and_mutations() {
        let m = MiipInstance::from_inequality(
            &parse_inequality("0 <= max { h(A) - h(A,B) ; h(B) - h(A) }").unwrap(),
        )
        .unwrap();
        let good =
            verify_built(&build_queries(&m, Construction::Uniform).unwrap(), 10_000).unwrap();
        assert!(good.passes() && good.chains_anchored, "{}", good.to_text());
        assert_eq!(good.adornments_found, 4);
        // the split of U already pins chains; losing only the Z anchor is harmless
        let drop = verify_built(
            &build_queries_mutated(&m, Construction::Uniform, Some(Mutation::DropAnchor)).unwrap(),
            10_000,
        )
        .unwrap();
        assert!(drop.passes());
        let merged =
            build_queries_mutated(&m, Construction::Uniform, Some(Mutation::MergeU)).unwrap();
        let bad = verify_built(&merged, 10_000).unwrap();
        assert!(!bad.passes());
        assert!(!bad.chains_anchored);
        let phi = bad.offending.expect("offending homomorphism");
        let eps = erasure(&merged.et_composed(&phi), &merged.q1_origin, 3);
        assert!(!merged.targets.contains(&eps));
    }

    #[test]
    fn caps_and_integrality() {
        let m = parse_inequality("0 <= 1/2 h(A)").unwrap();
        assert!(matches!(
            MiipInstance::from_inequality(&m),
            Err(ReductionError::NonInteger(_))
        ));
        let big = MiipInstance::from_inequality(
            &parse_inequality("0 <= h(A) + h(B) + h(C) + h(D) + h(E)").unwrap(),
        )
        .unwrap();
        assert!(big.check_caps(DEFAULT_MAX_EXPRS, DEFAULT_MAX_VARS).is_err());
        assert!(iti()
            .check_caps(DEFAULT_MAX_EXPRS, DEFAULT_MAX_VARS)
            .is_ok());
    }

    #[test]
    fn manifest_names_every_variable() {
        let b = build_queries(&iti(), Construction::Direct).unwrap();
        let man = b.manifest();
        assert_eq!(man.lines().count(), 1 + 9 + 13);
        assert!(man.contains("q1 X2_a3 base=X2 adornment=3"));
        let text = b.queries_text();
        let q1 = crate::parse_query(text.lines().next().unwrap(), None).unwrap();
        assert_eq!(q1.num_vars(), 9);
    }

    #[test]
    fn round_trips_through_containment() {
        use crate::containment::{decide_containment, Outcome, PipelineConfig};
        for (src, want) in [
            ("0 <= h(A)", Outcome::Contained),
            ("0 <= -h(A)", Outcome::NotContained),
            ("0 <= h(A) + h(B) - h(A,B)", Outcome::Contained),
            ("0 <= h(A,B) - h(A) - h(B)", Outcome::NotContained),
        ] {
            let m = MiipInstance::from_inequality(&parse_inequality(src).unwrap()).unwrap();
            let b = build_queries(&m, Construction::Direct).unwrap();
            let (q1, q2) = (b.q1.to_query().unwrap(), b.q2.to_query().unwrap());
            let v = decide_containment(&q1, &q2, &PipelineConfig::default()).unwrap();
            assert_eq!(v.outcome, want, "{src}");
        }
    }
}

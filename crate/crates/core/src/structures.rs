//! Relational structures, V-relations and homomorphisms.
//!
//! Values in a [`RelationalStructure`] are indices into its domain, whose
//! entries are opaque tokens. V-relation values are small integers; domain
//! products intern value pairs back into integers so products nest without
//! type growth.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use thiserror::Error;

use crate::decomposition::{junction_tree, TreeDecomposition};
use crate::query::ConjunctiveQuery;
use crate::varset::VarSet;

/// Default node-expansion cap for enumeration and counting.
pub const DEFAULT_NODE_CAP: u64 = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("relation {relation} used with arity {found}, expected {expected}")]
    Arity {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("value {0} is not in the domain")]
    NotInDomain(String),
    #[error("duplicate column {0}")]
    DuplicateColumn(String),
    #[error("row width {found} does not match {expected} columns")]
    RowWidth { expected: usize, found: usize },
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("column lists differ")]
    ColumnMismatch,
    #[error("step set must be a proper subset of the variables")]
    FullStep,
    #[error("normal relation needs {required} factors, cap is {cap}")]
    SizeCap { required: u64, cap: u64 },
    #[error("factor multiplicity must be positive")]
    ZeroMultiplicity,
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HomError {
    #[error("homomorphism search exceeded {cap} node expansions ({partial} found so far)")]
    NodeCap { cap: u64, partial: u64 },
    #[error("homomorphism enumeration exceeded the limit of {limit}")]
    Limit { limit: usize },
    #[error("homomorphism count overflowed")]
    Overflow,
}

/// `(A, R_1^A, ..., R_m^A)`; tuples hold domain indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RelationalStructure {
    domain: Vec<String>,
    index: HashMap<String, u32>,
    relations: BTreeMap<String, BTreeSet<Vec<u32>>>,
    arities: BTreeMap<String, usize>,
}

impl RelationalStructure {
    pub fn new() -> RelationalStructure {
        RelationalStructure::default()
    }

    pub fn with_domain<S: Into<String>>(
        domain: impl IntoIterator<Item = S>,
    ) -> RelationalStructure {
        let mut s = RelationalStructure::new();
        for d in domain {
            s.intern(d);
        }
        s
    }

    /// Index of `token`, adding it to the domain if new.
    pub fn intern(&mut self, token: impl Into<String>) -> u32 {
        let token = token.into();
        if let Some(&i) = self.index.get(&token) {
            return i;
        }
        let i = self.domain.len() as u32;
        self.index.insert(token.clone(), i);
        self.domain.push(token);
        i
    }

    /// Declare a relation symbol (possibly with no tuples).
    pub fn declare(&mut self, relation: &str, arity: usize) -> Result<(), StructureError> {
        match self.arities.get(relation) {
            Some(&a) if a != arity => Err(StructureError::Arity {
                relation: relation.to_string(),
                expected: a,
                found: arity,
            }),
            Some(_) => Ok(()),
            None => {
                self.arities.insert(relation.to_string(), arity);
                self.relations.entry(relation.to_string()).or_default();
                Ok(())
            }
        }
    }

    pub fn add_tuple(&mut self, relation: &str, tuple: Vec<u32>) -> Result<(), StructureError> {
        self.declare(relation, tuple.len())?;
        if let Some(&v) = tuple.iter().find(|&&v| v as usize >= self.domain.len()) {
            return Err(StructureError::NotInDomain(v.to_string()));
        }
        self.relations
            .get_mut(relation)
            .expect("declared")
            .insert(tuple);
        Ok(())
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn domain_size(&self) -> usize {
        self.domain.len()
    }

    pub fn relations(&self) -> &BTreeMap<String, BTreeSet<Vec<u32>>> {
        &self.relations
    }

    pub fn relation(&self, name: &str) -> Option<&BTreeSet<Vec<u32>>> {
        self.relations.get(name)
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.arities.get(name).copied()
    }

    pub fn num_tuples(&self) -> usize {
        self.relations.values().map(|r| r.len()).sum()
    }

    /// `domain: v1 v2 ...` then `R: (a,b) (b,c) ...` per relation.
    pub fn to_text(&self) -> String {
        let mut s = format!("domain: {}\n", self.domain.join(" "));
        for (r, tuples) in &self.relations {
            let ts: Vec<String> = tuples
                .iter()
                .map(|t| {
                    let vs: Vec<&str> = t
                        .iter()
                        .map(|&v| self.domain[v as usize].as_str())
                        .collect();
                    format!("({})", vs.join(","))
                })
                .collect();
            let _ = writeln!(s, "{r}: {}", ts.join(" "));
        }
        s
    }

    /// Parse the text form. Without a `domain:` line the domain is the set
    /// of values in order of appearance; with one, values must lie in it.
    pub fn from_text(text: &str) -> Result<RelationalStructure, StructureError> {
        let mut s = RelationalStructure::new();
        let mut fixed = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: &str| StructureError::Parse {
                line: i + 1,
                message: m.to_string(),
            };
            let (head, rest) = line.split_once(':').ok_or_else(|| err("expected ':'"))?;
            let head = head.trim();
            if head == "domain" {
                for v in rest.split_whitespace() {
                    s.intern(v);
                }
                fixed = true;
                continue;
            }
            if head.is_empty() || head.contains(char::is_whitespace) {
                return Err(err("bad relation name"));
            }
            let mut rest = rest.trim();
            let mut tuples = Vec::new();
            while !rest.is_empty() {
                let body = rest.strip_prefix('(').ok_or_else(|| err("expected '('"))?;
                let (inner, tail) = body.split_once(')').ok_or_else(|| err("expected ')'"))?;
                let vals: Vec<&str> = inner.split(',').map(str::trim).collect();
                if vals.iter().any(|v| v.is_empty()) {
                    return Err(err("empty value"));
                }
                tuples.push(vals);
                rest = tail.trim_start();
            }
            if let Some(t) = tuples.first() {
                s.declare(head, t.len())?;
            }
            for t in tuples {
                let mut tuple = Vec::with_capacity(t.len());
                for v in t {
                    match s.index.get(v) {
                        Some(&id) => tuple.push(id),
                        None if fixed => return Err(StructureError::NotInDomain(v.to_string())),
                        None => tuple.push(s.intern(v)),
                    }
                }
                s.add_tuple(head, tuple)?;
            }
        }
        Ok(s)
    }
}

/// A relation whose columns are named variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VRelation {
    columns: Vec<String>,
    rows: BTreeSet<Vec<u32>>,
}

impl VRelation {
    pub fn new(columns: Vec<String>) -> Result<VRelation, StructureError> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c) {
                return Err(StructureError::DuplicateColumn(c.clone()));
            }
        }
        Ok(VRelation {
            columns,
            rows: BTreeSet::new(),
        })
    }

    pub fn from_rows(
        columns: Vec<String>,
        rows: impl IntoIterator<Item = Vec<u32>>,
    ) -> Result<VRelation, StructureError> {
        let mut p = VRelation::new(columns)?;
        for r in rows {
            p.insert(r)?;
        }
        Ok(p)
    }

    pub fn insert(&mut self, row: Vec<u32>) -> Result<(), StructureError> {
        if row.len() != self.columns.len() {
            return Err(StructureError::RowWidth {
                expected: self.columns.len(),
                found: row.len(),
            });
        }
        self.rows.insert(row);
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &BTreeSet<Vec<u32>> {
        &self.rows
    }

    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Same rows with columns reordered to `order`.
    pub fn reorder(&self, order: &[String]) -> Result<VRelation, StructureError> {
        if order.len() != self.columns.len() {
            return Err(StructureError::ColumnMismatch);
        }
        let idx = order
            .iter()
            .map(|c| {
                self.column_index(c)
                    .ok_or_else(|| StructureError::UnknownColumn(c.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        VRelation::from_rows(
            order.to_vec(),
            self.rows
                .iter()
                .map(|r| idx.iter().map(|&i| r[i]).collect()),
        )
    }

    /// `cols: x y z` then one `row: a b c` per tuple.
    pub fn to_text(&self) -> String {
        let mut s = format!("cols: {}\n", self.columns.join(" "));
        for r in &self.rows {
            let vs: Vec<String> = r.iter().map(u32::to_string).collect();
            let _ = writeln!(s, "row: {}", vs.join(" "));
        }
        s
    }

    /// Parse the text form. Numeric tokens keep their value; if any token
    /// is not a number, all tokens are interned as `1, 2, ...` in order of
    /// first appearance.
    pub fn from_text(text: &str) -> Result<VRelation, StructureError> {
        let mut columns = None;
        let mut raw_rows: Vec<(usize, Vec<String>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: &str| StructureError::Parse {
                line: i + 1,
                message: m.to_string(),
            };
            let (head, rest) = line.split_once(':').ok_or_else(|| err("expected ':'"))?;
            let toks: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
            match head.trim() {
                "cols" if columns.is_none() => columns = Some(toks),
                "cols" => return Err(err("duplicate cols line")),
                "row" => raw_rows.push((i + 1, toks)),
                _ => return Err(err("expected 'cols:' or 'row:'")),
            }
        }
        let columns = columns.ok_or(StructureError::Parse {
            line: 0,
            message: "missing cols line".into(),
        })?;
        let numeric = raw_rows
            .iter()
            .all(|(_, r)| r.iter().all(|t| t.parse::<u32>().is_ok()));
        let mut intern: HashMap<String, u32> = HashMap::new();
        let mut p = VRelation::new(columns)?;
        for (_, r) in raw_rows {
            let row = r
                .into_iter()
                .map(|t| {
                    if numeric {
                        t.parse().expect("checked")
                    } else {
                        let next = intern.len() as u32 + 1;
                        *intern.entry(t).or_insert(next)
                    }
                })
                .collect();
            p.insert(row)?;
        }
        Ok(p)
    }
}

/// Multiset of step factors `(W, multiplicity)` over `n` named variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalRelationSpec {
    names: Vec<String>,
    factors: Vec<(VarSet, u32)>,
}

impl NormalRelationSpec {
    pub fn new(
        names: Vec<String>,
        factors: Vec<(VarSet, u32)>,
    ) -> Result<NormalRelationSpec, StructureError> {
        let full = VarSet::full(names.len());
        for &(w, m) in &factors {
            if !w.is_subset(full) || w == full {
                return Err(StructureError::FullStep);
            }
            if m == 0 {
                return Err(StructureError::ZeroMultiplicity);
            }
        }
        Ok(NormalRelationSpec { names, factors })
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn factors(&self) -> &[(VarSet, u32)] {
        &self.factors
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.factors.iter().map(|&(_, m)| m as u64).sum()
    }
}

/// One tuple per atom; the domain is the query's variables.
pub fn canonical_structure(q: &ConjunctiveQuery) -> RelationalStructure {
    let mut s = RelationalStructure::with_domain(q.var_names());
    for a in q.atoms() {
        s.add_tuple(&a.relation, a.args.iter().map(|&v| v as u32).collect())
            .expect("query atoms are consistent");
    }
    s
}

/// Per-relation lookup sets for the target structure.
fn tuple_sets(a: &RelationalStructure) -> HashMap<&str, HashSet<&[u32]>> {
    a.relations
        .iter()
        .map(|(r, ts)| (r.as_str(), ts.iter().map(Vec::as_slice).collect()))
        .collect()
}

/// Search plan: a connected element order and, per step, the source tuples
/// completed by that step.
struct Plan<'a> {
    order: Vec<usize>,
    checks: Vec<Vec<(&'a str, &'a [u32])>>,
}

fn plan<'a>(elements: usize, tuples: &[(&'a str, &'a [u32])]) -> Plan<'a> {
    let mut adj = vec![BTreeSet::new(); elements];
    let mut used = vec![false; elements];
    for (_, t) in tuples {
        for &u in *t {
            used[u as usize] = true;
            for &v in *t {
                if u != v {
                    adj[u as usize].insert(v as usize);
                }
            }
        }
    }
    let mut order = Vec::with_capacity(elements);
    let mut placed = vec![false; elements];
    let mut frontier = BTreeSet::new();
    // constrained elements first, adjacent-first; free elements last
    while order.len() < elements {
        let next = frontier
            .pop_first()
            .or_else(|| (0..elements).find(|&e| !placed[e] && used[e]))
            .or_else(|| (0..elements).find(|&e| !placed[e]))
            .expect("elements remain");
        if placed[next] {
            continue;
        }
        placed[next] = true;
        order.push(next);
        frontier.extend(adj[next].iter().copied().filter(|&v| !placed[v]));
    }
    let mut pos = vec![0; elements];
    for (i, &e) in order.iter().enumerate() {
        pos[e] = i;
    }
    let mut checks = vec![Vec::new(); elements];
    for &(r, t) in tuples {
        if let Some(last) = t.iter().map(|&v| pos[v as usize]).max() {
            checks[last].push((r, t));
        }
    }
    Plan { order, checks }
}

struct Search<'a> {
    plan: Plan<'a>,
    targets: HashMap<&'a str, HashSet<&'a [u32]>>,
    domain: u32,
    nodes: &'a AtomicU64,
    cap: u64,
}

impl Search<'_> {
    fn consistent(&self, step: usize, assign: &[u32], buf: &mut Vec<u32>) -> bool {
        self.plan.checks[step].iter().all(|(r, t)| {
            buf.clear();
            buf.extend(t.iter().map(|&v| assign[v as usize]));
            self.targets
                .get(r)
                .is_some_and(|set| set.contains(buf.as_slice()))
        })
    }

    /// Depth-first from `step`; `emit` returns false to stop early.
    fn run(
        &self,
        step: usize,
        assign: &mut Vec<u32>,
        emit: &mut dyn FnMut(&[u32]) -> bool,
    ) -> Result<bool, ()> {
        if step == self.plan.order.len() {
            return Ok(emit(assign));
        }
        let e = self.plan.order[step];
        let mut buf = Vec::new();
        for v in 0..self.domain {
            if self.nodes.fetch_add(1, Ordering::Relaxed) >= self.cap {
                return Err(());
            }
            assign[e] = v;
            if self.consistent(step, assign, &mut buf) && !self.run(step + 1, assign, emit)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn source_tuples(b: &RelationalStructure) -> Vec<(&str, &[u32])> {
    b.relations
        .iter()
        .flat_map(|(r, ts)| ts.iter().map(move |t| (r.as_str(), t.as_slice())))
        .collect()
}

/// All homomorphisms `B → A`, as vectors indexed by `B`'s domain, in
/// lexicographic order. The top level is split across rayon workers.
pub fn enumerate_homomorphisms(
    b: &RelationalStructure,
    a: &RelationalStructure,
    limit: Option<usize>,
) -> Result<Vec<Vec<u32>>, HomError> {
    enumerate_homomorphisms_capped(b, a, limit, DEFAULT_NODE_CAP)
}

pub fn enumerate_homomorphisms_capped(
    b: &RelationalStructure,
    a: &RelationalStructure,
    limit: Option<usize>,
    node_cap: u64,
) -> Result<Vec<Vec<u32>>, HomError> {
    let n = b.domain_size();
    let tuples = atom_order(n, &source_tuples(b));
    let targets: HashMap<&str, Vec<&[u32]>> = a
        .relations
        .iter()
        .map(|(r, ts)| (r.as_str(), ts.iter().map(Vec::as_slice).collect()))
        .collect();
    let mut loose: Vec<usize> = (0..n).collect();
    loose.retain(|&e| !tuples.iter().any(|(_, t)| t.contains(&(e as u32))));
    let search = AtomSearch {
        tuples: &tuples,
        targets: &targets,
        loose: &loose,
        domain: a.domain_size() as u32,
        nodes: AtomicU64::new(0),
        found: AtomicU64::new(0),
        cap: node_cap,
        max: limit.map_or(u64::MAX, |l| l as u64 + 1),
    };
    let first: Vec<&[u32]> = match tuples.first() {
        Some((r, _)) => targets.get(r).cloned().unwrap_or_default(),
        None => vec![&[][..]],
    };
    let parts: Vec<Result<Vec<Vec<u32>>, ()>> = first
        .into_par_iter()
        .map(|img| {
            let mut assign = vec![None; n];
            let mut out = Vec::new();
            if tuples.is_empty() {
                search.loose_fill(0, &mut assign, &mut out)?;
            } else {
                search.place(0, img, &mut assign, &mut out)?;
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::new();
    for p in parts {
        match p {
            Ok(v) => all.extend(v),
            Err(()) => {
                let found = search.found.load(Ordering::Relaxed);
                return Err(match limit {
                    Some(l) if found > l as u64 => HomError::Limit { limit: l },
                    _ => HomError::NodeCap {
                        cap: node_cap,
                        partial: found,
                    },
                });
            }
        }
    }
    if let Some(l) = limit {
        if all.len() > l {
            return Err(HomError::Limit { limit: l });
        }
    }
    all.sort();
    Ok(all)
}

/// Source atoms reordered so each shares an element with an earlier one
/// whenever possible (largest first within a component).
fn atom_order<'a>(n: usize, tuples: &[(&'a str, &'a [u32])]) -> Vec<(&'a str, &'a [u32])> {
    let mut rest: Vec<(&str, &[u32])> = tuples.to_vec();
    let mut seen = vec![false; n];
    let mut out = Vec::with_capacity(rest.len());
    while !rest.is_empty() {
        let pick = rest
            .iter()
            .enumerate()
            .max_by_key(|(i, (_, t))| {
                let shared = t.iter().filter(|&&v| seen[v as usize]).count();
                (shared > 0, shared, t.len(), std::cmp::Reverse(*i))
            })
            .map(|(i, _)| i)
            .expect("non-empty");
        let (r, t) = rest.remove(pick);
        for &v in t {
            seen[v as usize] = true;
        }
        out.push((r, t));
    }
    out
}

/// Atom-at-a-time search: each source atom picks a target tuple.
struct AtomSearch<'a> {
    tuples: &'a [(&'a str, &'a [u32])],
    targets: &'a HashMap<&'a str, Vec<&'a [u32]>>,
    loose: &'a [usize],
    domain: u32,
    nodes: AtomicU64,
    found: AtomicU64,
    cap: u64,
    max: u64,
}

impl AtomSearch<'_> {
    fn tick(&self) -> Result<(), ()> {
        if self.nodes.fetch_add(1, Ordering::Relaxed) >= self.cap
            || self.found.load(Ordering::Relaxed) >= self.max
        {
            return Err(());
        }
        Ok(())
    }

    /// Try mapping atom `step` onto `img`, then continue.
    fn place(
        &self,
        step: usize,
        img: &[u32],
        assign: &mut [Option<u32>],
        out: &mut Vec<Vec<u32>>,
    ) -> Result<(), ()> {
        self.tick()?;
        let (_, t) = self.tuples[step];
        let mut fresh = Vec::new();
        let mut ok = true;
        for (&v, &w) in t.iter().zip(img) {
            match assign[v as usize] {
                Some(x) if x != w => {
                    ok = false;
                    break;
                }
                Some(_) => {}
                None => {
                    assign[v as usize] = Some(w);
                    fresh.push(v as usize);
                }
            }
        }
        let res = if ok {
            self.next(step + 1, assign, out)
        } else {
            Ok(())
        };
        for v in fresh {
            assign[v] = None;
        }
        res
    }

    fn next(
        &self,
        step: usize,
        assign: &mut [Option<u32>],
        out: &mut Vec<Vec<u32>>,
    ) -> Result<(), ()> {
        if step == self.tuples.len() {
            return self.loose_fill(0, assign, out);
        }
        let (r, _) = self.tuples[step];
        if let Some(cands) = self.targets.get(r) {
            for img in cands {
                self.place(step, img, assign, out)?;
            }
        }
        Ok(())
    }

    /// Elements in no tuple range over the whole target domain.
    fn loose_fill(
        &self,
        i: usize,
        assign: &mut [Option<u32>],
        out: &mut Vec<Vec<u32>>,
    ) -> Result<(), ()> {
        if i == self.loose.len() {
            if self.found.fetch_add(1, Ordering::Relaxed) >= self.max {
                return Err(());
            }
            out.push(assign.iter().map(|v| v.expect("assigned")).collect());
            return Ok(());
        }
        for w in 0..self.domain {
            self.tick()?;
            assign[self.loose[i]] = Some(w);
            self.loose_fill(i + 1, assign, out)?;
        }
        assign[self.loose[i]] = None;
        Ok(())
    }
}

/// `|hom(B, A)|` by backtracking.
pub fn count_by_backtracking(
    b: &RelationalStructure,
    a: &RelationalStructure,
    node_cap: u64,
) -> Result<u128, HomError> {
    let n = b.domain_size();
    let tuples = source_tuples(b);
    if n == 0 {
        return Ok(tuples.is_empty() as u128);
    }
    let nodes = AtomicU64::new(0);
    let search = Search {
        plan: plan(n, &tuples),
        targets: tuple_sets(a),
        domain: a.domain_size() as u32,
        nodes: &nodes,
        cap: node_cap,
    };
    let first = search.plan.order[0];
    let parts: Vec<Result<u128, ()>> = (0..search.domain)
        .into_par_iter()
        .map(|v| {
            let mut assign = vec![0u32; n];
            assign[first] = v;
            let mut count = 0u128;
            if search.consistent(0, &assign, &mut Vec::new()) {
                search.run(1, &mut assign, &mut |_| {
                    count += 1;
                    true
                })?;
            }
            Ok(count)
        })
        .collect();
    let mut total = 0u128;
    for p in parts {
        let c = p.map_err(|_| HomError::NodeCap {
            cap: node_cap,
            partial: 0,
        })?;
        total = total.checked_add(c).ok_or(HomError::Overflow)?;
    }
    Ok(total)
}

/// `|hom(Q, D)|` with the default node cap.
pub fn count_homomorphisms(
    q: &ConjunctiveQuery,
    d: &RelationalStructure,
) -> Result<u128, HomError> {
    count_homomorphisms_capped(q, d, DEFAULT_NODE_CAP)
}

/// `|hom(Q, D)|`: junction-tree dynamic programming for chordal queries,
/// one bag (plain backtracking) otherwise.
pub fn count_homomorphisms_capped(
    q: &ConjunctiveQuery,
    d: &RelationalStructure,
    node_cap: u64,
) -> Result<u128, HomError> {
    if q.atoms().is_empty() {
        return Ok(1);
    }
    match junction_tree(q) {
        Ok(t) => count_with_decomposition(q, d, &t, node_cap),
        Err(_) => count_by_backtracking(&canonical_structure(q), d, node_cap),
    }
}

/// Counting DP over any tree decomposition of `q`. Each bag's table holds
/// the assignments of its variables satisfying every atom inside the bag.
pub fn count_with_decomposition(
    q: &ConjunctiveQuery,
    d: &RelationalStructure,
    t: &TreeDecomposition,
    node_cap: u64,
) -> Result<u128, HomError> {
    let nodes = AtomicU64::new(0);
    let targets = tuple_sets(d);
    let bags = t.bags();
    // bag tables
    let mut tables: Vec<Vec<(Vec<u32>, u128)>> = Vec::with_capacity(bags.len());
    for &bag in bags {
        let vars: Vec<usize> = bag.iter().collect();
        let local: HashMap<usize, u32> = vars
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i as u32))
            .collect();
        let atoms: Vec<(String, Vec<u32>)> = q
            .atoms()
            .iter()
            .filter(|a| a.var_set().is_subset(bag))
            .map(|a| {
                (
                    a.relation.clone(),
                    a.args.iter().map(|v| local[v]).collect(),
                )
            })
            .collect();
        let mut b = RelationalStructure::with_domain(vars.iter().map(|v| v.to_string()));
        for (r, args) in &atoms {
            b.add_tuple(r, args.clone()).expect("consistent");
        }
        let tuples = source_tuples(&b);
        let search = Search {
            plan: plan(vars.len(), &tuples),
            targets: targets.clone(),
            domain: d.domain_size() as u32,
            nodes: &nodes,
            cap: node_cap,
        };
        let mut rows = Vec::new();
        let mut assign = vec![0u32; vars.len()];
        if !vars.is_empty() {
            search
                .run(0, &mut assign, &mut |m| {
                    rows.push((m.to_vec(), 1u128));
                    true
                })
                .map_err(|_| HomError::NodeCap {
                    cap: node_cap,
                    partial: 0,
                })?;
        } else {
            rows.push((Vec::new(), 1));
        }
        tables.push(rows);
    }
    // children lists and a post-order
    let k = bags.len();
    let mut children = vec![Vec::new(); k];
    for v in 0..k {
        if let Some(p) = t.parent(v) {
            children[p].push(v);
        }
    }
    let mut post = Vec::with_capacity(k);
    let mut stack: Vec<(usize, bool)> = t.roots().into_iter().rev().map(|r| (r, false)).collect();
    while let Some((v, done)) = stack.pop() {
        if done {
            post.push(v);
        } else {
            stack.push((v, true));
            for &c in children[v].iter().rev() {
                stack.push((c, false));
            }
        }
    }
    let positions = |bag: VarSet, sub: VarSet| -> Vec<usize> {
        let vars: Vec<usize> = bag.iter().collect();
        sub.iter()
            .map(|v| vars.iter().position(|&u| u == v).expect("subset"))
            .collect()
    };
    let mut total = 1u128;
    for v in post {
        let table = std::mem::take(&mut tables[v]);
        match t.parent(v) {
            Some(p) => {
                let sep = bags[v].intersection(bags[p]);
                let here = positions(bags[v], sep);
                let mut msg: HashMap<Vec<u32>, u128> = HashMap::new();
                for (row, w) in table {
                    let key: Vec<u32> = here.iter().map(|&i| row[i]).collect();
                    let e = msg.entry(key).or_insert(0);
                    *e = e.checked_add(w).ok_or(HomError::Overflow)?;
                }
                let there = positions(bags[p], sep);
                let parent_rows = std::mem::take(&mut tables[p]);
                let mut next = Vec::with_capacity(parent_rows.len());
                for (row, w) in parent_rows {
                    let key: Vec<u32> = there.iter().map(|&i| row[i]).collect();
                    if let Some(&m) = msg.get(&key) {
                        next.push((row, w.checked_mul(m).ok_or(HomError::Overflow)?));
                    }
                }
                tables[p] = next;
            }
            None => {
                let mut sum = 0u128;
                for (_, w) in table {
                    sum = sum.checked_add(w).ok_or(HomError::Overflow)?;
                }
                total = total.checked_mul(sum).ok_or(HomError::Overflow)?;
            }
        }
    }
    Ok(total)
}

/// `Π_φ(P) = {f∘φ : f ∈ P}` for `φ` given as column names.
pub fn generalized_projection(
    p: &VRelation,
    phi: &[String],
) -> Result<BTreeSet<Vec<u32>>, StructureError> {
    let idx = phi
        .iter()
        .map(|c| {
            p.column_index(c)
                .ok_or_else(|| StructureError::UnknownColumn(c.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(project_indices(p, &idx))
}

fn project_indices(p: &VRelation, idx: &[usize]) -> BTreeSet<Vec<u32>> {
    p.rows
        .iter()
        .map(|r| idx.iter().map(|&i| r[i]).collect())
        .collect()
}

/// `Π_{Q1}(P)`: each relation is the union of the projections of `P` on its
/// atoms. The domain is the set of values in `P`, in increasing order.
pub fn induce_database(
    q1: &ConjunctiveQuery,
    p: &VRelation,
) -> Result<RelationalStructure, StructureError> {
    let names = q1.var_names();
    if names.len() != p.arity() || names.iter().any(|n| p.column_index(n).is_none()) {
        return Err(StructureError::ColumnMismatch);
    }
    let col: Vec<usize> = names
        .iter()
        .map(|n| p.column_index(n).expect("checked"))
        .collect();
    let values: BTreeSet<u32> = p.rows.iter().flatten().copied().collect();
    let mut d = RelationalStructure::with_domain(values.iter().map(u32::to_string));
    let pos: HashMap<u32, u32> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i as u32))
        .collect();
    for a in q1.atoms() {
        d.declare(&a.relation, a.arity())?;
        let idx: Vec<usize> = a.args.iter().map(|&v| col[v]).collect();
        for t in project_indices(p, &idx) {
            d.add_tuple(&a.relation, t.iter().map(|v| pos[v]).collect())?;
        }
    }
    Ok(d)
}

/// `P1 ⊗ P2`: value pairs per column, interned as `1, 2, ...` in sorted
/// pair order.
pub fn domain_product(p1: &VRelation, p2: &VRelation) -> Result<VRelation, StructureError> {
    if p1.columns != p2.columns {
        return Err(StructureError::ColumnMismatch);
    }
    let pairs: BTreeSet<(u32, u32)> = p1
        .rows
        .iter()
        .flat_map(|f| {
            p2.rows
                .iter()
                .flat_map(move |g| f.iter().copied().zip(g.iter().copied()))
        })
        .collect();
    let id: HashMap<(u32, u32), u32> = pairs
        .into_iter()
        .enumerate()
        .map(|(i, pr)| (pr, i as u32 + 1))
        .collect();
    let rows = p1
        .rows
        .iter()
        .flat_map(|f| {
            p2.rows.iter().map(|g| {
                f.iter()
                    .zip(g)
                    .map(|(&a, &b)| id[&(a, b)])
                    .collect::<Vec<u32>>()
            })
        })
        .collect::<Vec<_>>();
    VRelation::from_rows(p1.columns.clone(), rows)
}

/// `P_W = {f1, f2}`: all 1s, and 1s on `W` with 2s elsewhere.
pub fn step_relation(w: VarSet, vars: &[String]) -> Result<VRelation, StructureError> {
    let full = VarSet::full(vars.len());
    if w == full || !w.is_subset(full) {
        return Err(StructureError::FullStep);
    }
    let f1 = vec![1; vars.len()];
    let f2 = (0..vars.len())
        .map(|i| if w.contains(i) { 1 } else { 2 })
        .collect();
    VRelation::from_rows(vars.to_vec(), [f1, f2])
}

/// `P_{W1} ⊗ ... ⊗ P_{Wm}` with `m = Σ multiplicities`; `cap` bounds `m`.
///
/// Row `b ∈ {0,1}^m` picks `f2` in the factors set in `b`. Column `c`
/// holds the bits of `b` for the factors whose `W` misses `c`, packed and
/// shifted to start at 1. This is the iterated pairing up to a bijection
/// per column, so entropies agree; columns with the same varying factors
/// count share values.
pub fn materialize_normal(
    spec: &NormalRelationSpec,
    cap: u64,
) -> Result<VRelation, StructureError> {
    let m = spec.total_multiplicity();
    if m > cap || m > 30 {
        return Err(StructureError::SizeCap {
            required: m,
            cap: cap.min(30),
        });
    }
    let expanded: Vec<VarSet> = spec
        .factors
        .iter()
        .flat_map(|&(w, k)| std::iter::repeat_n(w, k as usize))
        .collect();
    let n = spec.n();
    // per column, the factors that put a 2 there when chosen
    let off: Vec<Vec<usize>> = (0..n)
        .map(|c| {
            (0..expanded.len())
                .filter(|&f| !expanded[f].contains(c))
                .collect()
        })
        .collect();
    let rows = (0..1u32 << m).map(|b| {
        off.iter()
            .map(|fs| {
                1 + fs
                    .iter()
                    .enumerate()
                    .fold(0u32, |acc, (i, &f)| acc | (b >> f & 1) << i)
            })
            .collect::<Vec<u32>>()
    });
    VRelation::from_rows(spec.names.clone(), rows)
}

/// Tag every value with its column, so columns share no values.
pub fn annotate(p: &VRelation) -> VRelation {
    let pairs: BTreeSet<(usize, u32)> = p
        .rows
        .iter()
        .flat_map(|r| r.iter().enumerate().map(|(c, &v)| (c, v)))
        .collect();
    let id: HashMap<(usize, u32), u32> = pairs
        .into_iter()
        .enumerate()
        .map(|(i, k)| (k, i as u32 + 1))
        .collect();
    let rows: BTreeSet<Vec<u32>> = p
        .rows
        .iter()
        .map(|r| r.iter().enumerate().map(|(c, &v)| id[&(c, v)]).collect())
        .collect();
    VRelation {
        columns: p.columns.clone(),
        rows,
    }
}

/// `n·A`: `n` renamed-apart copies; element `x` of copy `k` is `x@k`.
pub fn disjoint_copies(a: &RelationalStructure, n: usize) -> RelationalStructure {
    let size = a.domain_size() as u32;
    let mut s = RelationalStructure::new();
    for k in 0..n {
        for x in &a.domain {
            s.intern(format!("{x}@{}", k + 1));
        }
    }
    for (r, &ar) in &a.arities {
        s.declare(r, ar).expect("fresh");
    }
    for k in 0..n as u32 {
        for (r, ts) in &a.relations {
            for t in ts {
                s.add_tuple(r, t.iter().map(|&v| v + k * size).collect())
                    .expect("in range");
            }
        }
    }
    s
}

/// Outcome of checking `|P| > |hom(Q2, Π_{Q1}(P))|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessCheck {
    pub holds: bool,
    pub size: usize,
    pub homs: u128,
}

/// Check whether `P` witnesses non-containment of `Q1` in `Q2`.
pub fn verify_witness(
    q1: &ConjunctiveQuery,
    q2: &ConjunctiveQuery,
    p: &VRelation,
) -> Result<WitnessCheck, WitnessError> {
    verify_witness_capped(q1, q2, p, DEFAULT_NODE_CAP)
}

pub fn verify_witness_capped(
    q1: &ConjunctiveQuery,
    q2: &ConjunctiveQuery,
    p: &VRelation,
    node_cap: u64,
) -> Result<WitnessCheck, WitnessError> {
    let d = induce_database(q1, p)?;
    let homs = count_homomorphisms_capped(q2, &d, node_cap)?;
    Ok(WitnessCheck {
        holds: (p.len() as u128) > homs,
        size: p.len(),
        homs,
    })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WitnessError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("indeterminate: {0}")]
    Hom(#[from] HomError),
}

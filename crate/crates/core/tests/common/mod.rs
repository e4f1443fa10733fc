//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use bagcq::decomposition::{classify, junction_tree};
use bagcq::inequality::{ConditionalForm, MaxInequality};
use bagcq::polymatroid::{entropy_of_relation, is_polymatroid};
use bagcq::{
    rat, Atom, ConjunctiveQuery, LinearExpression, Rational, SetFunction, TreeDecomposition,
    VRelation, VarSet,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("X{i}")).collect()
}

/// A random relation over `n` columns with values in `0..domain`.
pub fn random_relation(r: &mut impl Rng, n: usize, domain: u32, max_rows: usize) -> VRelation {
    let rows = r.gen_range(1..=max_rows);
    let tuples: Vec<Vec<u32>> = (0..rows)
        .map(|_| (0..n).map(|_| r.gen_range(0..domain)).collect())
        .collect();
    VRelation::from_rows(names(n), tuples).unwrap()
}

fn random_subset(r: &mut impl Rng, n: usize) -> VarSet {
    VarSet(r.gen_range(0..(1u32 << n)))
}

fn random_nonempty(r: &mut impl Rng, n: usize) -> VarSet {
    VarSet(r.gen_range(1..(1u32 << n)))
}

/// Parity on three coordinates `t`, lifted to `n` variables.
fn lifted_parity(t: [usize; 3], n: usize) -> SetFunction {
    SetFunction::from_fn(n, |x| {
        let k = t.iter().filter(|&&i| x.contains(i)).count();
        rat(k.min(2) as i64)
    })
}

/// A random rational polymatroid: a non-negative mix of step functions,
/// lifted parity functions and a rationalized relation entropy. Candidates
/// that fail the polymatroid check after rounding are discarded.
pub fn random_polymatroid(r: &mut impl Rng, n: usize) -> SetFunction {
    loop {
        let mut h = SetFunction::zero(n);
        for _ in 0..r.gen_range(0..4) {
            let w = VarSet(r.gen_range(0..(1u32 << n) - 1));
            let c = Rational::new(r.gen_range(1..6).into(), r.gen_range(1..4).into());
            h = h.add(&SetFunction::from_step_weights(n, &[(w, c)]));
        }
        if n >= 3 && r.gen_bool(0.5) {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(r);
            h = h.add(&lifted_parity([idx[0], idx[1], idx[2]], n));
        }
        if r.gen_bool(0.7) {
            let p = random_relation(r, n, 3, 6);
            let e = entropy_of_relation(&p).unwrap().rationalize(1 << 20);
            if !is_polymatroid(&e) {
                continue;
            }
            h = h.add(&e);
        }
        if is_polymatroid(&h) {
            return h;
        }
    }
}

/// `Σ d·h(Y|X) − q·h(V)` with `|X| ≤ max_cond`.
pub fn random_conditional_expression(
    r: &mut impl Rng,
    n: usize,
    max_cond: usize,
) -> LinearExpression {
    let mut terms = Vec::new();
    for _ in 0..r.gen_range(1..=4) {
        let y = random_nonempty(r, n);
        let x = loop {
            let x = random_subset(r, n).difference(y);
            if x.len() <= max_cond {
                break x;
            }
        };
        terms.push((rat(r.gen_range(1..=3)), y, x));
    }
    let form = ConditionalForm {
        terms,
        q: rat(r.gen_range(1..=3)),
    };
    form.expand(n)
}

pub fn random_max_inequality(
    r: &mut impl Rng,
    n: usize,
    k: usize,
    max_cond: usize,
) -> MaxInequality {
    let exprs = (0..k)
        .map(|_| random_conditional_expression(r, n, max_cond))
        .collect();
    MaxInequality::with_names(names(n), exprs)
}

const VOCAB: [(&str, usize); 3] = [("R", 2), ("S", 2), ("T", 1)];

/// A random Boolean query with at most `max_vars` variables and
/// `1..=max_atoms` atoms over a fixed small vocabulary.
pub fn random_query(
    r: &mut impl Rng,
    name: &str,
    max_vars: usize,
    max_atoms: usize,
) -> ConjunctiveQuery {
    loop {
        let nv = r.gen_range(1..=max_vars);
        let atoms: Vec<Atom> = (0..r.gen_range(1..=max_atoms))
            .map(|_| {
                let (rel, ar) = VOCAB[r.gen_range(0..VOCAB.len())];
                Atom::new(rel, (0..ar).map(|_| r.gen_range(0..nv)).collect())
            })
            .collect();
        let vars: Vec<String> = (0..nv)
            .map(|i| format!("{}{}", name.to_lowercase(), i + 1))
            .collect();
        if let Ok(q) = ConjunctiveQuery::new(name, vars, atoms, Vec::new(), 20) {
            return q;
        }
    }
}

/// Whether `q` is chordal with a simple junction tree.
pub fn chordal_simple(q: &ConjunctiveQuery) -> bool {
    match junction_tree(q) {
        Ok(t) => {
            let c = classify(&t, &q.atom_sets());
            c.chordal && c.simple
        }
        Err(_) => false,
    }
}

/// A random tree decomposition with `1..=max_bags` nodes over `n`
/// variables: each variable occupies a random connected subtree.
pub fn random_decomposition(r: &mut impl Rng, n: usize, max_bags: usize) -> TreeDecomposition {
    let m = r.gen_range(1..=max_bags);
    let edges: Vec<(usize, usize)> = (1..m).map(|i| (r.gen_range(0..i), i)).collect();
    let mut adj = vec![Vec::new(); m];
    for &(a, b) in &edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut bags = vec![VarSet::EMPTY; m];
    for v in 0..n {
        let start = r.gen_range(0..m);
        let mut members = vec![start];
        let target = r.gen_range(1..=m);
        while members.len() < target {
            let frontier: Vec<usize> = members
                .iter()
                .flat_map(|&u| adj[u].iter().copied())
                .filter(|w| !members.contains(w))
                .collect();
            match frontier.choose(r) {
                Some(&w) => members.push(w),
                None => break,
            }
        }
        for u in members {
            bags[u].insert(v);
        }
    }
    TreeDecomposition::new(bags, edges).unwrap()
}

/// A homomorphic image of `q2` (random variable merges onto at most
/// `max_vars` names), optionally with one extra random atom.
pub fn derived_query(r: &mut impl Rng, q2: &ConjunctiveQuery, max_vars: usize) -> ConjunctiveQuery {
    let nv = r.gen_range(1..=max_vars);
    let map: Vec<usize> = (0..q2.num_vars()).map(|_| r.gen_range(0..nv)).collect();
    let mut atoms: Vec<Atom> = q2
        .atoms()
        .iter()
        .map(|a| Atom::new(a.relation.clone(), a.args.iter().map(|&v| map[v]).collect()))
        .collect();
    if r.gen_bool(0.5) {
        let (rel, ar) = VOCAB[r.gen_range(0..VOCAB.len())];
        atoms.push(Atom::new(
            rel,
            (0..ar).map(|_| r.gen_range(0..nv)).collect(),
        ));
    }
    let vars: Vec<String> = (0..nv).map(|i| format!("x{}", i + 1)).collect();
    ConjunctiveQuery::new("Q1", vars, atoms, Vec::new(), 20).expect("image of a valid query")
}

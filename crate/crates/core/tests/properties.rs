mod common;

use bagcq::decomposition::{
    classify, enumerate_junction_trees, is_acyclic, junction_tree, triangulated_decomposition,
};
use bagcq::polymatroid::{
    conditional, is_modular, is_polymatroid, mobius_forward, mobius_inverse,
    modular_from_singletons, modularization, mutual_information,
};
use bagcq::structures::{
    canonical_structure, count_by_backtracking, count_homomorphisms, enumerate_homomorphisms,
};
use bagcq::{parse_query, rat, Rational, RelationalStructure, SetFunction, VarSet};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn set_function() -> impl Strategy<Value = SetFunction> {
    (1usize..=6).prop_flat_map(|n| {
        prop::collection::vec(-20i64..20, 1 << n)
            .prop_map(move |v| SetFunction::new(n, v.into_iter().map(rat).collect()))
    })
}

proptest! {
    #[test]
    fn mobius_round_trip(h in set_function()) {
        prop_assert_eq!(mobius_forward(&mobius_inverse(&h)), h);
    }

    #[test]
    fn modular_rebuilt_from_singletons(a in prop::collection::vec(0i64..10, 1..=6)) {
        let n = a.len();
        let h = SetFunction::from_fn(n, |x| x.iter().map(|i| rat(a[i])).sum::<Rational>());
        prop_assert!(is_modular(&h));
        let singles: Vec<Rational> = (0..n).map(|i| h.get(VarSet::singleton(i))).collect();
        prop_assert_eq!(modular_from_singletons(&singles), h);
    }
}

#[test]
fn polymatroid_laws_hold_on_random_polymatroids() {
    let mut r = rng(21);
    for n in 1..=5 {
        for _ in 0..40 {
            let h = random_polymatroid(&mut r, n);
            for y in VarSet::all(n) {
                for x in VarSet::all(n) {
                    assert!(conditional(&h, y, x) >= rat(0));
                    // h(XY|X) ≤ h(Y|X∩Y)
                    let lhs = h.get(x.union(y)) - h.get(x);
                    let rhs = h.get(y) - h.get(x.intersection(y));
                    assert!(lhs <= rhs);
                }
            }
            if n >= 2 {
                let last = VarSet::singleton(n - 1);
                for i in 0..n - 1 {
                    assert!(
                        mutual_information(&h, VarSet::singleton(i), last, VarSet::EMPTY)
                            <= h.get(last)
                    );
                }
            }
            let m = modularization(&h);
            assert!(
                is_modular(&m)
                    && m.dominated_by(&h)
                    && m.get(VarSet::full(n)) == h.get(VarSet::full(n))
            );
        }
    }
}

#[test]
fn acyclic_iff_some_junction_tree_is_atom_covered() {
    let mut r = rng(22);
    for _ in 0..300 {
        let q = random_query(&mut r, "Q", 5, 5);
        let atoms = q.atom_sets();
        let covered = enumerate_junction_trees(&q, 256)
            .map(|ts| {
                ts.iter().any(|t| {
                    t.bags()
                        .iter()
                        .all(|b| atoms.iter().any(|a| b.is_subset(*a)))
                })
            })
            .unwrap_or(false);
        assert_eq!(is_acyclic(&q), covered, "{q}");
    }
}

#[test]
fn triangulation_is_a_valid_decomposition() {
    let mut r = rng(23);
    for _ in 0..200 {
        let q = random_query(&mut r, "Q", 5, 5);
        let t = triangulated_decomposition(&q).unwrap();
        t.validate(&q.atom_sets()).unwrap();
        if let Ok(j) = junction_tree(&q) {
            let mut a = t.bags().to_vec();
            let mut b = j.bags().to_vec();
            a.sort();
            b.sort();
            assert_eq!(a, b, "chordal query {q}");
        }
    }
    let cycle = parse_query("Q :- R(a,b), R(b,c), R(c,d), R(d,a).", None).unwrap();
    let t = triangulated_decomposition(&cycle).unwrap();
    assert_eq!(t.num_nodes(), 2);
    assert!(t.bags().iter().all(|b| b.len() == 3));
    assert!(!classify(&t, &cycle.atom_sets()).acyclic);
}

/// A random database over the generators' vocabulary.
fn random_database(r: &mut impl Rng, domain: usize) -> RelationalStructure {
    let mut d = RelationalStructure::with_domain((0..domain).map(|i| format!("c{i}")));
    for (rel, ar) in [("R", 2), ("S", 2), ("T", 1)] {
        d.declare(rel, ar).unwrap();
        for _ in 0..r.gen_range(0..=domain * 2) {
            d.add_tuple(
                rel,
                (0..ar).map(|_| r.gen_range(0..domain as u32)).collect(),
            )
            .unwrap();
        }
    }
    d
}

#[test]
fn counting_agrees_with_enumeration() {
    let mut r = rng(24);
    for _ in 0..200 {
        let q = random_query(&mut r, "Q", 5, 4);
        let d = random_database(&mut r, 3);
        let b = canonical_structure(&q);
        let dp = count_homomorphisms(&q, &d).unwrap();
        let bt = count_by_backtracking(&b, &d, 1 << 30).unwrap();
        let en = enumerate_homomorphisms(&b, &d, None).unwrap().len() as u128;
        assert_eq!((dp, bt), (en, en), "{q}");
    }
}

#[test]
fn small_counts() {
    let tri = parse_query("Q :- R(x,y), R(y,z), R(z,x).", None).unwrap();
    let mut k3 = RelationalStructure::with_domain(["a", "b", "c"]);
    for (u, v) in [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)] {
        k3.add_tuple("R", vec![u, v]).unwrap();
    }
    assert_eq!(count_homomorphisms(&tri, &k3).unwrap(), 6);
    let empty = bagcq::ConjunctiveQuery::new("Q", vec![], vec![], vec![], 20).unwrap();
    assert_eq!(count_homomorphisms(&empty, &k3).unwrap(), 1);
}

#[test]
fn polymatroid_generator_is_sound() {
    let mut r = rng(25);
    for n in 1..=5 {
        for _ in 0..20 {
            assert!(is_polymatroid(&random_polymatroid(&mut r, n)));
        }
    }
}

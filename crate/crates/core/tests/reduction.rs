mod common;

use bagcq::containment::{decide_containment, PipelineConfig};
use bagcq::decomposition::is_acyclic;
use bagcq::inequality::decide_max;
use bagcq::reduction::{
    build_queries, default_construction, rewrite, size_report, uniformize, verify_built,
    verify_reduction, Construction, MiipInstance,
};
use bagcq::{rat, ConeId, LinearExpression, Outcome, VarSet};
use common::*;
use rand::Rng;

/// A random integer expression over `n` variables with at least one term.
fn random_integer_expression(r: &mut impl Rng, n: usize) -> LinearExpression {
    loop {
        let mut e = LinearExpression::zero(n);
        for _ in 0..r.gen_range(1..=3) {
            let x = VarSet(r.gen_range(1..(1u32 << n)));
            let c = [-2, -1, 1, 2][r.gen_range(0..4)];
            e.add_term(x, &rat(c));
        }
        if !e.is_zero() {
            return e;
        }
    }
}

fn random_instance(r: &mut impl Rng, max_n: usize, max_k: usize) -> MiipInstance {
    let n = r.gen_range(1..=max_n);
    let k = r.gen_range(1..=max_k);
    let exprs = (0..k).map(|_| random_integer_expression(r, n)).collect();
    MiipInstance::new(names(n), exprs).unwrap()
}

#[test]
fn generated_instances_pass_verification() {
    let mut r = rng(41);
    let mut checked = 0;
    while checked < 12 {
        let m = random_instance(&mut r, 3, 2);
        for c in [default_construction(&m), Construction::Uniform] {
            if size_report(&m, c).q1_vars > 20 {
                continue;
            }
            let b = build_queries(&m, c).unwrap();
            let check = verify_built(&b, 200_000).unwrap();
            assert!(check.passes(), "{}: {}", m.to_inequality(), check.to_text());
            assert!(check.chains_anchored, "{}", m.to_inequality());
            assert_eq!(check.adornments_found, m.exprs().len() * b.copies);
            checked += 1;
        }
    }
}

#[test]
fn single_expression_with_two_copies_finds_two_adornments() {
    let m = MiipInstance::new(
        names(2),
        vec![LinearExpression::from_ints(
            2,
            &[(VarSet(1), 1), (VarSet(3), -1)],
        )],
    )
    .unwrap();
    assert_eq!(rewrite(&m.exprs()[0]).q(), 2);
    let check = verify_reduction(&m).unwrap();
    assert!(check.passes());
    assert_eq!(check.adornments_found, 2);
}

#[test]
fn uniformization_shape() {
    let mut r = rng(42);
    for _ in 0..40 {
        let m = random_instance(&mut r, 3, 3);
        let u = uniformize(&m);
        assert!(u.is_well_formed());
        assert_eq!(u.q_count, u.n_count + 1);
        let forms: Vec<_> = m.exprs().iter().map(rewrite).collect();
        assert_eq!(
            u.n_count,
            forms.iter().map(|f| f.negatives.len()).max().unwrap()
        );
        let p = 1 + forms
            .iter()
            .map(|f| f.positives.len() + u.n_count)
            .max()
            .unwrap();
        assert_eq!(u.p_count, p);
        let nb = m.n();
        let drop_u: Vec<VarSet> = (0..=nb)
            .map(|i| {
                if i < nb {
                    VarSet::singleton(i)
                } else {
                    VarSet::EMPTY
                }
            })
            .collect();
        for (i, e) in m.exprs().iter().enumerate() {
            let ex = u.expression(i);
            assert!(ex.coeffs().values().all(|c| c.is_integer()));
            assert_eq!(&ex.substitute_sets(&drop_u, nb), e);
        }
    }
}

#[test]
fn round_trip_against_the_cone_decision() {
    let mut r = rng(43);
    let cfg = PipelineConfig::default();
    let (mut compared, mut unknown) = (0, 0);
    for _ in 0..200 {
        let m = random_instance(&mut r, 3, 1);
        let f = rewrite(&m.exprs()[0]);
        let simple = f.negatives.iter().all(|x| x.len() <= 1);
        let rep = size_report(&m, Construction::Direct);
        if !simple || rep.q1_vars > 12 || rep.q2_vars > 20 {
            continue;
        }
        let b = build_queries(&m, Construction::Direct).unwrap();
        let (q1, q2) = (b.q1.to_query().unwrap(), b.q2.to_query().unwrap());
        assert!(is_acyclic(&q2));
        let valid = decide_max(&m.to_inequality(), ConeId::Polymatroid)
            .unwrap()
            .is_valid();
        match decide_containment(&q1, &q2, &cfg).unwrap().outcome {
            Outcome::Contained => assert!(valid, "{}", m.to_inequality()),
            Outcome::NotContained => assert!(!valid, "{}", m.to_inequality()),
            Outcome::Unknown => unknown += 1,
        }
        compared += 1;
    }
    println!("round trip: {compared} compared, {unknown} unknown");
    assert!(compared >= 20);
}

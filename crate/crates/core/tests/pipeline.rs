mod common;

use bagcq::containment::{
    brute_force_oracle, decide_containment, recheck_witness, search_normal_witness,
    search_product_witness, OracleResult, PipelineConfig, WitnessSource,
};
use bagcq::report::{containment_report, recheck, Report};
use bagcq::{parse_query, ConjunctiveQuery, Outcome};
use common::*;

fn q(s: &str) -> ConjunctiveQuery {
    parse_query(s, None).unwrap()
}

fn normal_pair() -> (ConjunctiveQuery, ConjunctiveQuery) {
    (
        q("Q1 :- A(x1,x2), B(x1,x2), C(x1,x2), A(z1,z2), B(z1,z2), C(z1,z2)."),
        q("Q2 :- A(y1,y2), B(y1,y3), C(y4,y2)."),
    )
}

fn vee_pair() -> (ConjunctiveQuery, ConjunctiveQuery) {
    (
        q("Q1 :- R(x1,x2), R(x2,x3), R(x3,x1)."),
        q("Q2 :- R(y1,y2), R(y1,y3)."),
    )
}

#[test]
fn self_containment_of_chordal_simple_queries() {
    let mut r = rng(31);
    let mut seen = 0;
    while seen < 20 {
        let q = random_query(&mut r, "Q", 4, 3);
        if !chordal_simple(&q) {
            continue;
        }
        seen += 1;
        let v = decide_containment(&q, &q, &PipelineConfig::default()).unwrap();
        assert_eq!(v.outcome, Outcome::Contained, "{q}");
    }
}

#[test]
fn empty_hom_set_is_refuted_by_the_canonical_database() {
    let v = decide_containment(
        &q("Q1 :- R(x,y)."),
        &q("Q2 :- S(x,y)."),
        &PipelineConfig::default(),
    )
    .unwrap();
    assert_eq!(v.outcome, Outcome::NotContained);
    let w = v.witness.unwrap();
    assert_eq!(w.source, WitnessSource::CanonicalDatabase);
    assert!(w.verified);
    assert_eq!((w.size, w.homs), (1, Some(0)));
}

#[test]
fn verdicts_are_deterministic_and_witnesses_recheck() {
    let mut r = rng(32);
    let cfg = PipelineConfig::default();
    for i in 0..60 {
        let q2 = random_query(&mut r, "Q2", 4, 3);
        let q1 = if i % 2 == 0 {
            random_query(&mut r, "Q1", 4, 3)
        } else {
            derived_query(&mut r, &q2, 4)
        };
        let a = decide_containment(&q1, &q2, &cfg).unwrap();
        let b = decide_containment(&q1, &q2, &cfg).unwrap();
        assert_eq!(a.outcome, b.outcome);
        assert_eq!(a.certificate, b.certificate);
        assert_eq!(a.witness, b.witness);
        if let Some(w) = a.witness.as_ref().filter(|w| w.verified) {
            let p = w.relation.as_ref().unwrap();
            let homs = recheck_witness(&a.q1, &a.q2, p).unwrap().unwrap();
            assert!((p.len() as u128) > homs, "{q1} / {q2}");
        }
        if a.class.chordal && a.class.simple {
            assert_ne!(a.cones_agree, Some(false), "{q1} / {q2}");
        }
        let back = Report::parse(&containment_report(&a).to_text()).unwrap();
        assert!(recheck(&back).unwrap().all_ok(), "{q1} / {q2}");
    }
}

#[test]
fn searches_on_the_normal_database_pair() {
    let (q1, q2) = normal_pair();
    assert!(search_product_witness(&q1, &q2, 3).unwrap().is_none());
    let w = search_normal_witness(&q1, &q2, 2)
        .unwrap()
        .expect("normal witness");
    assert!(w.verified);
    assert!(matches!(
        brute_force_oracle(&q1, &q2, 3, 4).unwrap(),
        OracleResult::Refuted(_)
    ));
}

#[test]
fn vee_pair_has_no_small_witness() {
    let (q1, q2) = vee_pair();
    assert!(matches!(
        brute_force_oracle(&q1, &q2, 3, 4).unwrap(),
        OracleResult::NoWitnessFound
    ));
}

#[test]
fn empty_hom_set_has_a_singleton_product_witness() {
    let w = search_product_witness(&q("Q1 :- R(x,y)."), &q("Q2 :- S(x,y)."), 1)
        .unwrap()
        .unwrap();
    assert_eq!((w.size, w.homs), (1, Some(0)));
}

#[test]
fn tiny_witness_cap_leaves_an_unmaterialized_witness() {
    let (q1, q2) = normal_pair();
    let cfg = PipelineConfig {
        witness_size_cap: 1,
        ..PipelineConfig::default()
    };
    let v = decide_containment(&q1, &q2, &cfg).unwrap();
    let w = v.witness.unwrap();
    assert!(!w.verified);
    assert!(w.spec.is_some());
    assert_eq!(v.outcome, Outcome::NotContained);
}

#[test]
fn heads_are_booleanized() {
    let v = decide_containment(
        &q("Q1(x) :- R(x,y), R(y,x)."),
        &q("Q2(x) :- R(x,y)."),
        &PipelineConfig::default(),
    )
    .unwrap();
    assert_eq!(v.outcome, Outcome::Contained);
    let v = decide_containment(
        &q("Q1(x) :- R(x,y)."),
        &q("Q2(x) :- R(y,x)."),
        &PipelineConfig::default(),
    )
    .unwrap();
    assert_eq!(v.outcome, Outcome::NotContained);
}

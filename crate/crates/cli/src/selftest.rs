//! Built-in sanity battery: known examples with fixed answers, then seeded
//! random containment cases cross-checked against a brute-force search.

use bagcq::containment::{brute_force_oracle, recheck_witness, OracleResult};
use bagcq::inequality::{decide_max, parse_inequality, verify_certificate};
use bagcq::polymatroid::{entropy_of_relation, parity_function};
use bagcq::reduction::{build_queries, verify_built, Construction, MiipInstance};
use bagcq::structures::count_homomorphisms;
use bagcq::{
    decide_containment, parse_query, Atom, ConeId, ConjunctiveQuery, DecisionResult, Outcome,
    PipelineConfig, RelationalStructure, VRelation,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Failure;

type Check = Result<String, String>;
type Named<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn q(s: &str) -> ConjunctiveQuery {
    parse_query(s, None).expect("built-in query")
}

fn outcome(q1: &str, q2: &str, want: Outcome) -> Check {
    let v = decide_containment(&q(q1), &q(q2), &PipelineConfig::default())
        .map_err(|e| e.to_string())?;
    if v.outcome != want {
        return Err(format!("got {}", v.outcome.name()));
    }
    if want == Outcome::NotContained && !v.witness.as_ref().is_some_and(|w| w.verified) {
        return Err("no verified witness".into());
    }
    Ok(format!(
        "{}, {} homomorphisms",
        v.outcome.name(),
        v.homomorphisms
    ))
}

fn validity(src: &str, cone: ConeId, want: bool) -> Check {
    let m = parse_inequality(src).map_err(|e| e.to_string())?;
    match decide_max(&m, cone).map_err(|e| e.to_string())? {
        DecisionResult::Valid(c) if want => {
            if verify_certificate(&m, &c) {
                Ok("valid, certificate re-verified".into())
            } else {
                Err("certificate failed".into())
            }
        }
        DecisionResult::Invalid(_) if !want => Ok("invalid".into()),
        r => Err(format!("got {}", r.verdict())),
    }
}

fn parity() -> Check {
    let cols = vec!["X1".to_string(), "X2".into(), "X3".into()];
    let p = VRelation::from_rows(
        cols,
        vec![vec![0, 0, 0], vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]],
    )
    .map_err(|e| e.to_string())?;
    let h = entropy_of_relation(&p)
        .map_err(|e| e.to_string())?
        .rationalize(1 << 20);
    if h == parity_function() {
        Ok("entropy equals the parity function".into())
    } else {
        Err("entropy differs".into())
    }
}

fn triangle() -> Check {
    let mut k3 = RelationalStructure::with_domain(["a", "b", "c"]);
    for (u, v) in [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)] {
        k3.add_tuple("R", vec![u, v]).map_err(|e| e.to_string())?;
    }
    let n =
        count_homomorphisms(&q("Q :- R(x,y), R(y,z), R(z,x)."), &k3).map_err(|e| e.to_string())?;
    if n == 6 {
        Ok("6 homomorphisms".into())
    } else {
        Err(format!("{n} homomorphisms"))
    }
}

fn reduction() -> Check {
    let m = parse_inequality(ITI).map_err(|e| e.to_string())?;
    let m = MiipInstance::from_inequality(&m).map_err(|e| e.to_string())?;
    let b = build_queries(&m, Construction::Direct).map_err(|e| e.to_string())?;
    let c = verify_built(&b, 1_000_000).map_err(|e| e.to_string())?;
    if c.passes() && c.homomorphisms == 243 {
        Ok("243 homomorphisms, conditions hold".into())
    } else {
        Err(c.to_text().replace('\n', " "))
    }
}

const ITI: &str = "0 <= h(X1) + 2 h(X2) + h(X3) - h(X1,X2) - h(X2,X3)";

const VOCAB: [(&str, usize); 3] = [("R", 2), ("S", 2), ("T", 1)];

fn random_query(r: &mut ChaCha8Rng, name: &str) -> ConjunctiveQuery {
    loop {
        let nv = r.gen_range(1..=4);
        let atoms: Vec<Atom> = (0..r.gen_range(1..=3))
            .map(|_| {
                let (rel, ar) = VOCAB[r.gen_range(0..VOCAB.len())];
                Atom::new(rel, (0..ar).map(|_| r.gen_range(0..nv)).collect())
            })
            .collect();
        let vars = (0..nv)
            .map(|i| format!("{}{}", name.to_lowercase(), i + 1))
            .collect();
        if let Ok(q) = ConjunctiveQuery::new(name, vars, atoms, Vec::new(), 20) {
            return q;
        }
    }
}

/// A homomorphic image of `q2`, so that `hom(Q2, Q1)` is nonempty.
fn image_of(r: &mut ChaCha8Rng, q2: &ConjunctiveQuery) -> ConjunctiveQuery {
    let nv = r.gen_range(1..=q2.num_vars());
    let map: Vec<usize> = (0..q2.num_vars()).map(|_| r.gen_range(0..nv)).collect();
    let atoms = q2
        .atoms()
        .iter()
        .map(|a| Atom::new(a.relation.clone(), a.args.iter().map(|&v| map[v]).collect()))
        .collect();
    let vars = (0..nv).map(|i| format!("x{}", i + 1)).collect();
    ConjunctiveQuery::new("Q1", vars, atoms, Vec::new(), 20).expect("image of a valid query")
}

/// Contained verdicts must survive the brute-force search; refutations
/// must carry a witness that rechecks.
fn random_cases(seed: u64, cases: usize, cfg: &PipelineConfig) -> Check {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = [0usize; 3];
    for i in 0..cases {
        let q2 = random_query(&mut r, "Q2");
        let q1 = if i % 2 == 0 {
            random_query(&mut r, "Q1")
        } else {
            image_of(&mut r, &q2)
        };
        let v = decide_containment(&q1, &q2, cfg).map_err(|e| e.to_string())?;
        match v.outcome {
            Outcome::Contained => {
                tally[0] += 1;
                let o = brute_force_oracle(&q1, &q2, 2, 2).map_err(|e| e.to_string())?;
                if let OracleResult::Refuted(_) = o {
                    return Err(format!("{q1} / {q2}: contained but refuted"));
                }
            }
            Outcome::NotContained => {
                tally[1] += 1;
                if let Some(p) = v
                    .witness
                    .as_ref()
                    .filter(|w| w.verified)
                    .and_then(|w| w.relation.as_ref())
                {
                    let homs = recheck_witness(&q1, &q2, p).map_err(|e| e.to_string())?;
                    if !homs.is_some_and(|h| (p.len() as u128) > h) {
                        return Err(format!("{q1} / {q2}: witness does not recheck"));
                    }
                }
            }
            Outcome::Unknown => tally[2] += 1,
        }
    }
    Ok(format!(
        "seed {seed}: {} contained, {} not contained, {} unknown",
        tally[0], tally[1], tally[2]
    ))
}

pub fn run(seed: u64, cases: usize, cfg: &PipelineConfig) -> Result<u8, Failure> {
    let vee = (
        "Q1 :- R(x1,x2), R(x2,x3), R(x3,x1).",
        "Q2 :- R(y1,y2), R(y1,y3).",
    );
    let normal = (
        "Q1 :- A(x1,x2), B(x1,x2), C(x1,x2), A(z1,z2), B(z1,z2), C(z1,z2).",
        "Q2 :- A(y1,y2), B(y1,y3), C(y4,y2).",
    );
    let e1e2e3 = "0 <= max { h(X1,X2) + h(X2|X1) - h(X1,X2,X3) ; \
                  h(X2,X3) + h(X3|X2) - h(X1,X2,X3) ; h(X1,X3) + h(X1|X3) - h(X1,X2,X3) }";
    let checks: Vec<Named> = vec![
        (
            "vee",
            Box::new(move || outcome(vee.0, vee.1, Outcome::Contained)),
        ),
        (
            "normal-database",
            Box::new(move || outcome(normal.0, normal.1, Outcome::NotContained)),
        ),
        (
            "three-way-max",
            Box::new(move || validity(e1e2e3, ConeId::Polymatroid, true)),
        ),
        (
            "chain-inequality",
            Box::new(|| validity(ITI, ConeId::Polymatroid, true)),
        ),
        (
            "mutual-information-sign",
            Box::new(|| validity("0 <= h(X1,X2) - h(X1) - h(X2)", ConeId::Polymatroid, false)),
        ),
        ("parity-entropy", Box::new(parity)),
        ("triangle-k3", Box::new(triangle)),
        ("reduction", Box::new(reduction)),
        ("random", Box::new(move || random_cases(seed, cases, cfg))),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("self-test {name} PASS {detail}"),
            Err(detail) => {
                failed += 1;
                println!("self-test {name} FAIL {detail}");
            }
        }
    }
    Ok(if failed == 0 { 0 } else { 1 })
}

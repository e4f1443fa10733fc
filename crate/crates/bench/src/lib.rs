//! Fixtures shared by the benchmarks: the standard example pairs and
//! inequalities, plus deterministic scalable families.

use bagcq::inequality::parse_inequality;
use bagcq::{parse_query, ConjunctiveQuery, MaxInequality, RelationalStructure};

fn q(s: &str) -> ConjunctiveQuery {
    parse_query(s, None).expect("fixture query")
}

/// Triangle into the two-atom vee (contained).
pub fn vee_pair() -> (ConjunctiveQuery, ConjunctiveQuery) {
    (
        q("Q1 :- R(x1,x2), R(x2,x3), R(x3,x1)."),
        q("Q2 :- R(y1,y2), R(y1,y3)."),
    )
}

/// Refuted by a four-tuple normal relation.
pub fn normal_pair() -> (ConjunctiveQuery, ConjunctiveQuery) {
    (
        q("Q1 :- A(x1,x2), B(x1,x2), C(x1,x2), A(z1,z2), B(z1,z2), C(z1,z2)."),
        q("Q2 :- A(y1,y2), B(y1,y3), C(y4,y2)."),
    )
}

/// `Q1` a directed `k`-cycle, `Q2` a path of length 2: `k` homomorphisms.
pub fn cycle_into_path(k: usize) -> (ConjunctiveQuery, ConjunctiveQuery) {
    let atoms: Vec<String> = (0..k)
        .map(|i| format!("R(x{},x{})", i, (i + 1) % k))
        .collect();
    (
        q(&format!("Q1 :- {}.", atoms.join(", "))),
        q("Q2 :- R(y1,y2), R(y2,y3)."),
    )
}

pub fn chain_inequality() -> MaxInequality {
    parse_inequality("0 <= h(X1) + 2 h(X2) + h(X3) - h(X1,X2) - h(X2,X3)").expect("fixture")
}

pub fn three_way_max() -> MaxInequality {
    parse_inequality(
        "0 <= max { h(X1,X2) + h(X2|X1) - h(X1,X2,X3) ; \
         h(X2,X3) + h(X3|X2) - h(X1,X2,X3) ; h(X1,X3) + h(X1|X3) - h(X1,X2,X3) }",
    )
    .expect("fixture")
}

/// Submodularity along a chain of `n` variables, summed: valid for every
/// polymatroid and needs about `n` elemental multipliers.
pub fn chain_submodularity(n: usize) -> MaxInequality {
    let v = |i: usize| format!("X{}", i + 1);
    let mut terms = Vec::new();
    for i in 0..n - 1 {
        terms.push(format!(
            "h({}) + h({}) - h({},{})",
            v(i),
            v(i + 1),
            v(i),
            v(i + 1)
        ));
    }
    parse_inequality(&format!("0 <= {}", terms.join(" + "))).expect("fixture")
}

/// Complete directed graph without loops on `n` vertices.
pub fn complete_graph(n: usize) -> RelationalStructure {
    let mut d = RelationalStructure::with_domain((0..n).map(|i| format!("v{i}")));
    for a in 0..n as u32 {
        for b in 0..n as u32 {
            if a != b {
                d.add_tuple("R", vec![a, b]).expect("binary");
            }
        }
    }
    d
}

pub fn triangle() -> ConjunctiveQuery {
    q("Q :- R(x,y), R(y,z), R(z,x).")
}

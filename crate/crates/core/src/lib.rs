//! Bag-set containment of conjunctive queries, decided through
//! max-linear information inequalities over polyhedral entropy cones.
//!
//! The crate is organised bottom-up:
//!
//! - [`query`]: query model, parser, booleanization and vocabulary closure.
//! - [`decomposition`]: chordality, junction trees, acyclicity, `E_T`.
//! - [`structures`]: databases, V-relations, homomorphisms, witnesses.
//! - [`polymatroid`]: set functions, Möbius inversion, normal domination.
//! - [`inequality`]: linear and max-linear inequalities, exact LP decisions.
//! - [`containment`]: the decision pipeline and witness searches.
//! - [`reduction`]: building query pairs from max-linear inequalities.
//! - [`report`]: line-oriented key/value reports that re-verify.

pub mod containment;
pub mod decomposition;
pub mod graph;
pub mod inequality;
pub mod polymatroid;
pub mod query;
pub mod reduction;
pub mod report;
pub mod structures;
pub mod varset;

/// Exact rational scalar used for coefficients, certificates and synthetic
/// set functions.
pub type Rational = num_rational::BigRational;

pub use containment::{decide_containment, ContainmentVerdict, Outcome, PipelineConfig};
pub use decomposition::{DecompositionClass, TreeDecomposition};
pub use graph::Graph;
pub use inequality::{ConeId, DecisionResult, LinearExpression, MaxInequality};
pub use polymatroid::{MobiusVector, RealSetFunction, SetFunction};
pub use query::{parse_query, Atom, ConjunctiveQuery, QueryError, Variable, Vocabulary};
pub use structures::{NormalRelationSpec, RelationalStructure, VRelation};
pub use varset::VarSet;

/// Parse an integer or `p/q` literal into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    use num_bigint::BigInt;
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q == BigInt::from(0) {
                return None;
            }
            Some(Rational::new(p, q))
        }
        None => s.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

/// Shorthand for small integer rationals.
pub fn rat(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

/// Shorthand for `p/q`.
pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(p.into(), q.into())
}

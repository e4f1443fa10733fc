//! Conjunctive queries: data model, parser, and the preprocessing
//! reductions applied before deciding containment.
//!
//! Query text follows a Datalog-like grammar:
//!
//! ```text
//! query  := name ( "(" varlist? ")" )? ":-" atom ("," atom)* "."
//! atom   := relname "(" var ("," var)* ")"
//! names  := [A-Za-z_][A-Za-z0-9_']*
//! ```
//!
//! `#` starts a comment that runs to the end of the line.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::graph::Graph;
use crate::varset::{VarSet, MAX_VARS};

/// Default cap on the number of query variables.
pub const DEFAULT_MAX_VARS: usize = 16;

/// Separator marking relation symbols introduced by [`close_vocabulary`].
const PROJECTION_MARK: &str = "__";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("relation {relation} has arity {expected} but is used with {found} arguments")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("query has {found} variables, cap is {cap}")]
    TooManyVariables { found: usize, cap: usize },
    #[error("head variable {0} does not occur in any atom")]
    HeadNotInBody(String),
    #[error("head arities differ: {0} vs {1}")]
    HeadArityMismatch(usize, usize),
    #[error("vocabulary closure would produce {atoms} atoms, limit is {limit}")]
    ClosureBlowUp { atoms: usize, limit: usize },
    #[error("arity cap {cap} is below the largest arity {arity}")]
    ArityCap { cap: usize, arity: usize },
    #[error("atom {0} has no arguments")]
    NullaryAtom(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Variable {
    pub id: usize,
    pub name: String,
}

/// A relational atom; `args[k]` is the id of the variable at position `k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub relation: String,
    pub args: Vec<usize>,
}

impl Atom {
    pub fn new(relation: impl Into<String>, args: Vec<usize>) -> Atom {
        Atom {
            relation: relation.into(),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn var_set(&self) -> VarSet {
        VarSet::from_iter(self.args.iter().copied())
    }
}

/// Relation symbol → arity.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    arities: BTreeMap<String, usize>,
}

impl Vocabulary {
    pub fn new() -> Vocabulary {
        Vocabulary::default()
    }

    pub fn insert(&mut self, relation: impl Into<String>, arity: usize) -> Result<(), QueryError> {
        let relation = relation.into();
        if arity == 0 {
            return Err(QueryError::NullaryAtom(relation));
        }
        match self.arities.get(&relation) {
            Some(&a) if a != arity => Err(QueryError::ArityMismatch {
                relation,
                expected: a,
                found: arity,
            }),
            _ => {
                self.arities.insert(relation, arity);
                Ok(())
            }
        }
    }

    pub fn arity(&self, relation: &str) -> Option<usize> {
        self.arities.get(relation).copied()
    }

    pub fn contains(&self, relation: &str) -> bool {
        self.arities.contains_key(relation)
    }

    pub fn max_arity(&self) -> usize {
        self.arities.values().copied().max().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.arities.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Merge another vocabulary, failing on conflicting arities.
    pub fn merge(&mut self, other: &Vocabulary) -> Result<(), QueryError> {
        for (r, a) in other.iter() {
            self.insert(r, a)?;
        }
        Ok(())
    }
}

/// A conjunctive query. Variables are dense `0..n` in first-occurrence
/// order over the body; repeated atoms are removed on construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjunctiveQuery {
    name: String,
    vars: Vec<Variable>,
    atoms: Vec<Atom>,
    head: Vec<usize>,
}

impl ConjunctiveQuery {
    /// Build a query from named atoms. Variables are numbered by first
    /// occurrence in the body.
    pub fn from_named(
        name: &str,
        head: &[&str],
        atoms: &[(&str, &[&str])],
    ) -> Result<ConjunctiveQuery, QueryError> {
        let mut ids: HashMap<String, usize> = HashMap::new();
        let mut names = Vec::new();
        let mut body = Vec::new();
        for (rel, args) in atoms {
            let args = args
                .iter()
                .map(|a| {
                    *ids.entry(a.to_string()).or_insert_with(|| {
                        names.push(a.to_string());
                        names.len() - 1
                    })
                })
                .collect();
            body.push(Atom::new(*rel, args));
        }
        let head = head
            .iter()
            .map(|h| {
                ids.get(*h)
                    .copied()
                    .ok_or_else(|| QueryError::HeadNotInBody(h.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        ConjunctiveQuery::new(name, names, body, head, MAX_VARS)
    }

    /// Build and validate a query. Atoms refer to variables by index into
    /// `var_names`; variables are renumbered by first occurrence and unused
    /// names are dropped.
    pub fn new(
        name: &str,
        var_names: Vec<String>,
        atoms: Vec<Atom>,
        head: Vec<usize>,
        max_vars: usize,
    ) -> Result<ConjunctiveQuery, QueryError> {
        let mut renumber: Vec<Option<usize>> = vec![None; var_names.len()];
        let mut vars = Vec::new();
        let mut seen = BTreeSet::new();
        let mut out_atoms = Vec::new();
        let mut vocab = Vocabulary::new();
        for atom in atoms {
            if atom.args.is_empty() {
                return Err(QueryError::NullaryAtom(atom.relation));
            }
            vocab.insert(atom.relation.clone(), atom.arity())?;
            let args: Vec<usize> = atom
                .args
                .iter()
                .map(|&a| {
                    *renumber[a].get_or_insert_with(|| {
                        vars.push(Variable {
                            id: vars.len(),
                            name: var_names[a].clone(),
                        });
                        vars.len() - 1
                    })
                })
                .collect();
            let atom = Atom::new(atom.relation, args);
            if seen.insert(atom.clone()) {
                out_atoms.push(atom);
            }
        }
        let cap = max_vars.min(MAX_VARS);
        if vars.len() > cap {
            return Err(QueryError::TooManyVariables {
                found: vars.len(),
                cap,
            });
        }
        let head = head
            .into_iter()
            .map(|h| renumber[h].ok_or_else(|| QueryError::HeadNotInBody(var_names[h].clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ConjunctiveQuery {
            name: name.to_string(),
            vars,
            atoms: out_atoms,
            head,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn head(&self) -> &[usize] {
        &self.head
    }

    pub fn is_boolean(&self) -> bool {
        self.head.is_empty()
    }

    pub fn var_name(&self, id: usize) -> &str {
        &self.vars[id].name
    }

    pub fn var_id(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn var_names(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.name.clone()).collect()
    }

    pub fn all_vars(&self) -> VarSet {
        VarSet::full(self.vars.len())
    }

    pub fn vocabulary(&self) -> Vocabulary {
        let mut v = Vocabulary::new();
        for a in &self.atoms {
            // arities were checked in `new`
            v.insert(a.relation.clone(), a.arity())
                .expect("consistent arities");
        }
        v
    }

    /// Variable sets of all atoms, in atom order.
    pub fn atom_sets(&self) -> Vec<VarSet> {
        self.atoms.iter().map(Atom::var_set).collect()
    }

    /// Check every atom against a supplied vocabulary.
    pub fn check_vocabulary(&self, vocab: &Vocabulary) -> Result<(), QueryError> {
        for a in &self.atoms {
            if let Some(expected) = vocab.arity(&a.relation) {
                if expected != a.arity() {
                    return Err(QueryError::ArityMismatch {
                        relation: a.relation.clone(),
                        expected,
                        found: a.arity(),
                    });
                }
            }
        }
        Ok(())
    }

    fn with_parts(&self, atoms: Vec<Atom>, head: Vec<usize>) -> ConjunctiveQuery {
        ConjunctiveQuery::new(&self.name, self.var_names(), atoms, head, MAX_VARS)
            .expect("derived query stays valid")
    }
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if !self.head.is_empty() {
            let h: Vec<&str> = self.head.iter().map(|&v| self.var_name(v)).collect();
            write!(f, "({})", h.join(","))?;
        }
        write!(f, " :- ")?;
        for (k, a) in self.atoms.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            let args: Vec<&str> = a.args.iter().map(|&v| self.var_name(v)).collect();
            write!(f, "{}({})", a.relation, args.join(","))?;
        }
        write!(f, ".")
    }
}

// ---------------------------------------------------------------------------
// Parser

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Name(String),
    LParen,
    RParen,
    Comma,
    Turnstile,
    Dot,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn err(&self, line: usize, column: usize, message: impl Into<String>) -> QueryError {
        QueryError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize, usize)>, QueryError> {
        let mut out = Vec::new();
        while let Some(&c) = self.chars.peek() {
            let (line, col) = (self.line, self.column);
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c.is_ascii_alphabetic() || c == '_' {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
                        s.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                out.push((Tok::Name(s), line, col));
            } else {
                self.bump();
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    '.' => Tok::Dot,
                    ':' => {
                        if self.chars.peek() == Some(&'-') {
                            self.bump();
                            Tok::Turnstile
                        } else {
                            return Err(self.err(line, col, "expected ':-'"));
                        }
                    }
                    other => {
                        return Err(self.err(line, col, format!("unexpected character {other:?}")))
                    }
                };
                out.push((tok, line, col));
            }
        }
        Ok(out)
    }
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|t| (t.1, t.2))
            .unwrap_or(self.end)
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, QueryError> {
        let (line, column) = self.here();
        Err(QueryError::Syntax {
            line,
            column,
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), QueryError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(format!("expected {what}"))
        }
    }

    fn name(&mut self, what: &str) -> Result<String, QueryError> {
        match self.peek() {
            Some(Tok::Name(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.fail(format!("expected {what}")),
        }
    }

    fn varlist(&mut self) -> Result<Vec<String>, QueryError> {
        let mut out = vec![self.name("variable")?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            out.push(self.name("variable")?);
        }
        Ok(out)
    }
}

/// Parse a query. When `vocab` is given, atom arities are checked against it;
/// otherwise arities are inferred (and must be consistent within the query).
pub fn parse_query(text: &str, vocab: Option<&Vocabulary>) -> Result<ConjunctiveQuery, QueryError> {
    parse_query_with_cap(text, vocab, DEFAULT_MAX_VARS)
}

pub fn parse_query_with_cap(
    text: &str,
    vocab: Option<&Vocabulary>,
    max_vars: usize,
) -> Result<ConjunctiveQuery, QueryError> {
    let lexer = Lexer::new(text);
    let toks = lexer.tokens()?;
    let end = text
        .lines()
        .enumerate()
        .last()
        .map_or((1, 1), |(i, l)| (i + 1, l.chars().count() + 1));
    let mut p = Parser { toks, pos: 0, end };

    let name = p.name("query name")?;
    let mut head_names = Vec::new();
    if p.peek() == Some(&Tok::LParen) {
        p.pos += 1;
        if p.peek() != Some(&Tok::RParen) {
            head_names = p.varlist()?;
        }
        p.expect(Tok::RParen, "')'")?;
    }
    p.expect(Tok::Turnstile, "':-'")?;

    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut atoms = Vec::new();
    loop {
        let (line, column) = p.here();
        let rel = p.name("relation name")?;
        p.expect(Tok::LParen, "'('")?;
        let args = p.varlist()?;
        p.expect(Tok::RParen, "')'")?;
        if let Some(v) = vocab {
            match v.arity(&rel) {
                Some(a) if a != args.len() => {
                    return Err(QueryError::ArityMismatch {
                        relation: rel,
                        expected: a,
                        found: args.len(),
                    })
                }
                None => {
                    return Err(QueryError::Syntax {
                        line,
                        column,
                        message: format!("relation {rel} is not in the vocabulary"),
                    })
                }
                _ => {}
            }
        }
        let ids = args
            .into_iter()
            .map(|a| {
                *index.entry(a.clone()).or_insert_with(|| {
                    names.push(a);
                    names.len() - 1
                })
            })
            .collect();
        atoms.push(Atom::new(rel, ids));
        match p.peek() {
            Some(Tok::Comma) => p.pos += 1,
            Some(Tok::Dot) => {
                p.pos += 1;
                break;
            }
            _ => return p.fail("expected ',' or '.'"),
        }
    }
    if p.pos < p.toks.len() {
        return p.fail("unexpected input after '.'");
    }
    let head = head_names
        .iter()
        .map(|h| {
            index
                .get(h)
                .copied()
                .ok_or_else(|| QueryError::HeadNotInBody(h.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    ConjunctiveQuery::new(&name, names, atoms, head, max_vars)
}

// ---------------------------------------------------------------------------
// Preprocessing

fn fresh_relation(base: &str, taken: &Vocabulary) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) {
        name.push('\'');
    }
    name
}

/// Make both queries Boolean by adding a fresh unary atom `U_i(x_i)` for
/// each head position. Boolean inputs are returned unchanged.
pub fn booleanize(
    q1: &ConjunctiveQuery,
    q2: &ConjunctiveQuery,
) -> Result<(ConjunctiveQuery, ConjunctiveQuery), QueryError> {
    if q1.head.len() != q2.head.len() {
        return Err(QueryError::HeadArityMismatch(q1.head.len(), q2.head.len()));
    }
    if q1.is_boolean() {
        return Ok((q1.clone(), q2.clone()));
    }
    let mut taken = q1.vocabulary();
    taken.merge(&q2.vocabulary())?;
    let mut rels = Vec::new();
    for i in 0..q1.head.len() {
        let r = fresh_relation(&format!("U_{}", i + 1), &taken);
        taken.insert(r.clone(), 1)?;
        rels.push(r);
    }
    let extend = |q: &ConjunctiveQuery| {
        let mut atoms = q.atoms.clone();
        for (r, &x) in rels.iter().zip(&q.head) {
            atoms.push(Atom::new(r.clone(), vec![x]));
        }
        q.with_parts(atoms, Vec::new())
    };
    Ok((extend(q1), extend(q2)))
}

/// True for relation symbols introduced by [`close_vocabulary`].
pub fn is_projection_symbol(relation: &str) -> bool {
    relation.contains(PROJECTION_MARK)
}

fn projection_symbol(relation: &str, positions: &[usize]) -> String {
    let pos: Vec<String> = positions.iter().map(|p| (p + 1).to_string()).collect();
    format!("{relation}{PROJECTION_MARK}{}", pos.join("_"))
}

fn close_one(q: &ConjunctiveQuery) -> Vec<Atom> {
    let mut atoms = q.atoms.clone();
    for a in &q.atoms {
        if is_projection_symbol(&a.relation) {
            continue;
        }
        let k = a.arity();
        for mask in 1u32..(1 << k) - 1 {
            let positions: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
            let args = positions.iter().map(|&i| a.args[i]).collect();
            atoms.push(Atom::new(projection_symbol(&a.relation, &positions), args));
        }
    }
    atoms
}

/// Add, for every atom `R(x̄)` and every proper nonempty position subset `S`,
/// the projected atom `R__S(x̄|S)` to both queries. Idempotent.
pub fn close_vocabulary(
    q1: &ConjunctiveQuery,
    q2: &ConjunctiveQuery,
    arity_cap: usize,
    max_atoms: usize,
) -> Result<(ConjunctiveQuery, ConjunctiveQuery), QueryError> {
    let mut vocab = q1.vocabulary();
    vocab.merge(&q2.vocabulary())?;
    if vocab.max_arity() > arity_cap {
        return Err(QueryError::ArityCap {
            cap: arity_cap,
            arity: vocab.max_arity(),
        });
    }
    let mut out = Vec::new();
    for q in [q1, q2] {
        let projected: usize = q
            .atoms
            .iter()
            .filter(|a| !is_projection_symbol(&a.relation))
            .map(|a| (1usize << a.arity()) - 2)
            .sum();
        let total = q.atoms.len() + projected;
        if total > max_atoms {
            return Err(QueryError::ClosureBlowUp {
                atoms: total,
                limit: max_atoms,
            });
        }
        let atoms = close_one(q);
        out.push(q.with_parts(atoms, q.head.clone()));
    }
    let q2c = out.pop().expect("two queries");
    let q1c = out.pop().expect("two queries");
    Ok((q1c, q2c))
}

/// Gaifman graph: an edge between distinct variables sharing an atom.
pub fn gaifman_graph(q: &ConjunctiveQuery) -> Graph {
    let mut g = Graph::new(q.num_vars());
    for a in &q.atoms {
        for (i, &u) in a.args.iter().enumerate() {
            for &v in &a.args[i + 1..] {
                g.add_edge(u, v);
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_triangle() {
        let q = parse_query("Q :- R(x,y), R(y,z), R(z,x).", None).unwrap();
        assert_eq!(q.num_vars(), 3);
        assert_eq!(q.atoms().len(), 3);
        assert!(q.is_boolean());
        assert_eq!(q.var_names(), vec!["x", "y", "z"]);
    }

    #[test]
    fn repeated_argument() {
        let q = parse_query("Q :- R(x,x).", None).unwrap();
        assert_eq!(q.num_vars(), 1);
        assert_eq!(q.atoms()[0].args, vec![0, 0]);
    }

    #[test]
    fn duplicate_atoms_removed() {
        let q = parse_query("Q :- R(x,y), R(x,y).", None).unwrap();
        assert_eq!(q.atoms().len(), 1);
    }

    #[test]
    fn head_and_comments() {
        let q = parse_query(
            "# header\nQ(x, z) :- P(x), S(u,x), # inline\n S(v,z), R(z).",
            None,
        )
        .unwrap();
        assert_eq!(q.head().len(), 2);
        assert_eq!(q.var_name(q.head()[1]), "z");
        let empty_head = parse_query("Q() :- R(x).", None).unwrap();
        assert!(empty_head.is_boolean());
    }

    #[test]
    fn syntax_error_position() {
        let err = parse_query("Q :- R(x,y)\n  S(y).", None).unwrap_err();
        assert_eq!(
            err,
            QueryError::Syntax {
                line: 2,
                column: 3,
                message: "expected ',' or '.'".into()
            }
        );
        assert!(matches!(
            parse_query("Q :- R(x,).", None),
            Err(QueryError::Syntax { .. })
        ));
        assert!(matches!(
            parse_query("Q : R(x).", None),
            Err(QueryError::Syntax { .. })
        ));
    }

    #[test]
    fn arity_errors() {
        assert!(matches!(
            parse_query("Q :- R(x,y), R(x).", None),
            Err(QueryError::ArityMismatch { .. })
        ));
        let mut v = Vocabulary::new();
        v.insert("R", 3).unwrap();
        assert!(matches!(
            parse_query("Q :- R(x,y).", Some(&v)),
            Err(QueryError::ArityMismatch {
                expected: 3,
                found: 2,
                ..
            })
        ));
    }

    #[test]
    fn head_must_occur() {
        assert_eq!(
            parse_query("Q(w) :- R(x).", None).unwrap_err(),
            QueryError::HeadNotInBody("w".into())
        );
    }

    #[test]
    fn variable_cap() {
        let text = "Q :- R(a,b), R(c,d), R(e,f).";
        assert!(matches!(
            parse_query_with_cap(text, None, 5),
            Err(QueryError::TooManyVariables { found: 6, cap: 5 })
        ));
    }

    #[test]
    fn unparse_roundtrip() {
        let q = parse_query("Q(x) :- R(x,y), S(y,y,z).", None).unwrap();
        let again = parse_query(&q.to_string(), None).unwrap();
        assert_eq!(q, again);
    }

    #[test]
    fn booleanize_example() {
        let q1 = parse_query("Q1(x,z) :- P(x), S(u,x), S(v,z), R(z).", None).unwrap();
        let q2 = parse_query("Q2(x,z) :- P(x), S(u,y), S(v,y), R(z).", None).unwrap();
        let (b1, b2) = booleanize(&q1, &q2).unwrap();
        assert!(b1.is_boolean() && b2.is_boolean());
        assert_eq!(b1.atoms().len(), 6);
        assert_eq!(b2.atoms().len(), 6);
        assert_eq!(
            b1.atoms()[4],
            Atom::new("U_1", vec![b1.var_id("x").unwrap()])
        );
        assert_eq!(
            b1.atoms()[5],
            Atom::new("U_2", vec![b1.var_id("z").unwrap()])
        );
        assert_eq!(
            b2.atoms()[5],
            Atom::new("U_2", vec![b2.var_id("z").unwrap()])
        );
    }

    #[test]
    fn booleanize_boolean_unchanged_and_mismatch() {
        let q = parse_query("Q :- R(x,y).", None).unwrap();
        let (a, b) = booleanize(&q, &q).unwrap();
        assert_eq!((a, b), (q.clone(), q.clone()));
        let h = parse_query("Q(x) :- R(x,y).", None).unwrap();
        assert_eq!(
            booleanize(&h, &q).unwrap_err(),
            QueryError::HeadArityMismatch(1, 0)
        );
        let (b1, _) = booleanize(&h, &h).unwrap();
        assert_eq!(b1.atoms().len(), 2);
    }

    #[test]
    fn booleanize_avoids_existing_names() {
        let q = parse_query("Q(x) :- U_1(x), R(x,y).", None).unwrap();
        let (b, _) = booleanize(&q, &q).unwrap();
        assert_eq!(b.atoms()[2].relation, "U_1'");
    }

    #[test]
    fn closure_of_ternary_atom() {
        let q = parse_query("Q :- R(a,b,c).", None).unwrap();
        let (c, _) = close_vocabulary(&q, &q, 3, 100).unwrap();
        assert_eq!(c.atoms().len(), 7);
        let rels: Vec<&str> = c.atoms().iter().map(|a| a.relation.as_str()).collect();
        assert_eq!(
            rels,
            vec!["R", "R__1", "R__2", "R__1_2", "R__3", "R__1_3", "R__2_3",]
        );
        let (cc, _) = close_vocabulary(&c, &c, 3, 100).unwrap();
        assert_eq!(cc, c);
    }

    #[test]
    fn closure_unary_unchanged_and_caps() {
        let q = parse_query("Q :- A(x), B(y).", None).unwrap();
        let (c, _) = close_vocabulary(&q, &q, 1, 10).unwrap();
        assert_eq!(c, q);
        let t = parse_query("Q :- R(a,b,c).", None).unwrap();
        assert!(matches!(
            close_vocabulary(&t, &t, 3, 5),
            Err(QueryError::ClosureBlowUp { .. })
        ));
        assert!(matches!(
            close_vocabulary(&t, &t, 2, 50),
            Err(QueryError::ArityCap { .. })
        ));
    }

    #[test]
    fn gaifman_graphs() {
        let tri = parse_query("Q :- R(x,y), R(y,z), R(z,x).", None).unwrap();
        assert_eq!(gaifman_graph(&tri), Graph::complete(3));
        let q2 = parse_query("Q2 :- A(y1,y2), B(y1,y3), C(y4,y2).", None).unwrap();
        let g = gaifman_graph(&q2);
        assert_eq!(g.edges(), vec![(0, 1), (0, 2), (1, 3)]);
        let unary = parse_query("Q :- A(x).", None).unwrap();
        assert_eq!(gaifman_graph(&unary).num_edges(), 0);
    }
}

//! Text syntax for inequalities:
//!
//! ```text
//! ineq    := "0" "<=" ( "max" "{" linexpr (";" linexpr)* "}" | linexpr )
//! linexpr := sign? term (sign term)*
//! term    := coeff? "*"? "h" "(" vars ( "|" vars )? ")"
//! coeff   := integer | integer "/" integer
//! ```
//!
//! Variables are numbered in natural name order (`X2` before `X10`).

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::One;
use thiserror::Error;

use super::{LinearExpression, MaxInequality};
use crate::varset::{VarSet, MAX_VARS};
use crate::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InequalityParseError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("inequality uses {0} variables, at most {MAX_VARS} are supported")]
    TooManyVariables(usize),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Sym(char),
    Le,
}

struct Lexed {
    toks: Vec<(Tok, usize, usize)>,
}

fn lex(text: &str) -> Result<Lexed, InequalityParseError> {
    let mut toks = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                toks.push((Tok::Num(s.parse().expect("digits")), li + 1, col));
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(chars[start..i].iter().collect()), li + 1, col));
            } else if c == '<' && chars.get(i + 1) == Some(&'=') {
                toks.push((Tok::Le, li + 1, col));
                i += 2;
            } else if "+-*/(),|{};".contains(c) {
                toks.push((Tok::Sym(c), li + 1, col));
                i += 1;
            } else {
                return Err(InequalityParseError::Syntax {
                    line: li + 1,
                    column: col,
                    message: format!("unexpected character '{c}'"),
                });
            }
        }
    }
    Ok(Lexed { toks })
}

/// A term before variable numbering: coefficient, conditioned names,
/// conditioning names.
type RawTerm = (Rational, Vec<String>, Vec<String>);

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn err(&self, message: impl Into<String>) -> InequalityParseError {
        let (line, column) = match self.toks.get(self.pos) {
            Some(&(_, l, c)) => (l, c),
            None => self.toks.last().map_or((1, 1), |&(_, l, c)| (l, c + 1)),
        };
        InequalityParseError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), InequalityParseError> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{c}'")))
        }
    }

    fn names(&mut self) -> Result<Vec<String>, InequalityParseError> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Ident(s)) => {
                    out.push(s.clone());
                    self.pos += 1;
                }
                _ => return Err(self.err("expected a variable name")),
            }
            if !self.eat_sym(',') {
                return Ok(out);
            }
        }
    }

    fn coefficient(&mut self) -> Result<Option<Rational>, InequalityParseError> {
        if let Some(Tok::Num(p)) = self.peek().cloned() {
            self.pos += 1;
            if self.eat_sym('/') {
                match self.peek().cloned() {
                    Some(Tok::Num(q)) if q != BigInt::from(0) => {
                        self.pos += 1;
                        return Ok(Some(Rational::new(p, q)));
                    }
                    _ => return Err(self.err("expected a nonzero denominator")),
                }
            }
            return Ok(Some(Rational::from_integer(p)));
        }
        Ok(None)
    }

    fn term(&mut self, sign: Rational) -> Result<RawTerm, InequalityParseError> {
        let c = self.coefficient()?.unwrap_or_else(Rational::one);
        self.eat_sym('*');
        match self.peek() {
            Some(Tok::Ident(s)) if s == "h" => self.pos += 1,
            _ => return Err(self.err("expected 'h('")),
        }
        self.expect_sym('(')?;
        let y = self.names()?;
        let x = if self.eat_sym('|') {
            self.names()?
        } else {
            Vec::new()
        };
        self.expect_sym(')')?;
        Ok((sign * c, y, x))
    }

    fn linexpr(&mut self) -> Result<Vec<RawTerm>, InequalityParseError> {
        let mut terms = Vec::new();
        let mut first = true;
        loop {
            let sign = if self.eat_sym('-') {
                -Rational::one()
            } else if self.eat_sym('+') || first {
                Rational::one()
            } else {
                return Ok(terms);
            };
            // a bare `0` stands for the empty expression
            if first
                && matches!(self.peek(), Some(Tok::Num(n)) if *n == BigInt::from(0))
                && !matches!(
                    self.toks.get(self.pos + 1).map(|t| &t.0),
                    Some(Tok::Ident(_)) | Some(Tok::Sym('*')) | Some(Tok::Sym('/'))
                )
            {
                self.pos += 1;
                first = false;
                continue;
            }
            terms.push(self.term(sign)?);
            first = false;
        }
    }
}

/// Parse `0 <= E` or `0 <= max { E1 ; E2 ; ... }`.
pub fn parse_inequality(text: &str) -> Result<MaxInequality, InequalityParseError> {
    let raw = parse_raw(text)?;
    let mut names: Vec<String> = raw
        .iter()
        .flatten()
        .flat_map(|(_, y, x)| y.iter().chain(x.iter()).cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    names.sort_by(|a, b| crate::varset::natural_cmp(a, b));
    assemble(raw, names)
}

/// Parse with a fixed variable order; every variable used must be listed.
pub fn parse_inequality_with_names(
    text: &str,
    names: &[String],
) -> Result<MaxInequality, InequalityParseError> {
    let raw = parse_raw(text)?;
    if let Some(v) = raw
        .iter()
        .flatten()
        .flat_map(|(_, y, x)| y.iter().chain(x.iter()))
        .find(|v| !names.contains(v))
    {
        return Err(InequalityParseError::Syntax {
            line: 1,
            column: 1,
            message: format!("variable {v} is not declared"),
        });
    }
    assemble(raw, names.to_vec())
}

type RawExpr = Vec<RawTerm>;

fn parse_raw(text: &str) -> Result<Vec<RawExpr>, InequalityParseError> {
    let Lexed { toks } = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    match p.peek() {
        Some(Tok::Num(z)) if *z == BigInt::from(0) => p.pos += 1,
        _ => return Err(p.err("inequality must start with '0 <='")),
    }
    if p.peek() != Some(&Tok::Le) {
        return Err(p.err("expected '<='"));
    }
    p.pos += 1;
    let mut raw = Vec::new();
    if matches!(p.peek(), Some(Tok::Ident(s)) if s == "max") {
        p.pos += 1;
        p.expect_sym('{')?;
        loop {
            raw.push(p.linexpr()?);
            if p.eat_sym(';') {
                continue;
            }
            p.expect_sym('}')?;
            break;
        }
    } else {
        raw.push(p.linexpr()?);
    }
    if p.pos != p.toks.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(raw)
}

fn assemble(raw: Vec<RawExpr>, names: Vec<String>) -> Result<MaxInequality, InequalityParseError> {
    if names.len() > MAX_VARS {
        return Err(InequalityParseError::TooManyVariables(names.len()));
    }
    let n = names.len();
    let set = |vs: &[String]| {
        VarSet::from_iter(
            vs.iter()
                .map(|v| names.iter().position(|m| m == v).expect("declared")),
        )
    };
    let exprs = raw
        .iter()
        .map(|terms| {
            let mut e = LinearExpression::zero(n);
            for (c, y, x) in terms {
                e.add_conditional(set(y), set(x), c);
            }
            e
        })
        .collect();
    Ok(MaxInequality::with_names(names, exprs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn vs(v: &[usize]) -> VarSet {
        VarSet::from_iter(v.iter().copied())
    }

    #[test]
    fn parses_linear() {
        let m = parse_inequality("0 <= h(X1) + 2 h(X2) + h(X3) - h(X1,X2) - h(X2,X3)").unwrap();
        assert_eq!(m.n(), 3);
        assert_eq!(m.exprs().len(), 1);
        let e = &m.exprs()[0];
        assert_eq!(e.coeff(vs(&[1])), rat(2));
        assert_eq!(e.coeff(vs(&[0, 1])), rat(-1));
        assert_eq!(e.coeff(vs(&[1, 2])), rat(-1));
        assert_eq!(e.coeffs().len(), 5);
    }

    #[test]
    fn parses_max_and_conditional() {
        let m = parse_inequality("0 <= max { h(X1) ; h(X2) }").unwrap();
        assert_eq!(m.exprs().len(), 2);
        let c = parse_inequality("0 <= h(X2|X1)").unwrap();
        assert_eq!(c.names(), &["X1".to_string(), "X2".to_string()]);
        assert_eq!(
            c.exprs()[0],
            LinearExpression::from_ints(2, &[(vs(&[0, 1]), 1), (vs(&[0]), -1)])
        );
        let r = parse_inequality("0 <= 1/3 * h(A) - 2/6 h(B)  # comment").unwrap();
        assert_eq!(r.exprs()[0].coeff(vs(&[0])), crate::ratio(1, 3));
        assert_eq!(r.exprs()[0].coeff(vs(&[1])), crate::ratio(-1, 3));
    }

    #[test]
    fn natural_order() {
        let m = parse_inequality("0 <= h(X10) + h(X2) + h(X1)").unwrap();
        assert_eq!(m.names(), &["X1", "X2", "X10"]);
    }

    #[test]
    fn roundtrip_through_text() {
        let src = "0 <= max { 2 h(X1,X2) - h(X1) - h(X1,X2,X3) ; h(X3) - 1/2 h(X1,X3) }";
        let m = parse_inequality(src).unwrap();
        assert_eq!(parse_inequality(&m.to_text()).unwrap(), m);
    }

    #[test]
    fn errors_have_positions() {
        match parse_inequality("0 <= h(X1) +\n  3 g(X2)") {
            Err(InequalityParseError::Syntax { line, column, .. }) => {
                assert_eq!((line, column), (2, 5))
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_inequality("1 <= h(X)").is_err());
        assert!(parse_inequality("0 <= max { h(X) ").is_err());
        assert!(parse_inequality("0 <= h(X) h(Y)").is_err());
    }
}

//! Line-oriented `key=value` reports.
//!
//! Every report starts with `kind=...`. Keys may repeat (rows, factors).
//! Rationals are written exactly as `p/q` (or an integer). A report carries
//! enough to re-check its certificate or witness with [`recheck`] without
//! deciding anything again.

use std::fmt::Write as _;

use thiserror::Error;

use crate::containment::{recheck_witness, ContainmentVerdict};
use crate::inequality::{
    parse_inequality_with_names, verify_certificate, verify_counterexample, Certificate, ConeId,
    Counterexample, DecisionResult, MaxInequality,
};
use crate::polymatroid::SetFunction;
use crate::query::parse_query;
use crate::structures::VRelation;
use crate::varset::VarSet;
use crate::{parse_rational, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReportError {
    #[error("line {0}: expected key=value")]
    Malformed(usize),
    #[error("missing key {0}")]
    Missing(&'static str),
    #[error("bad value for {key}: {message}")]
    Value { key: String, message: String },
    #[error("unsupported report kind {0}")]
    Kind(String),
}

/// An ordered list of `key=value` entries.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new(kind: &str) -> Report {
        let mut r = Report::default();
        r.push("kind", kind);
        r
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        let v = value.to_string().replace('\n', " ");
        self.entries.push((key.into(), v));
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries
            .iter()
            .filter(move |(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn kind(&self) -> &str {
        self.get("kind").unwrap_or("")
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().fold(String::new(), |mut s, (k, v)| {
            let _ = writeln!(s, "{k}={v}");
            s
        })
    }

    /// `key: value` lines, long lists shortened.
    pub fn to_human(&self) -> String {
        let width = self.entries.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        self.entries.iter().fold(String::new(), |mut s, (k, v)| {
            let shown = if v.len() > 160 {
                format!(
                    "{}... ({} chars)",
                    &v[..v.floor_char_boundary(150)],
                    v.len()
                )
            } else {
                v.clone()
            };
            let _ = writeln!(s, "{k:width$}  {shown}");
            s
        })
    }

    pub fn parse(text: &str) -> Result<Report, ReportError> {
        let mut r = Report::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ReportError::Malformed(i + 1))?;
            r.entries.push((k.to_string(), v.to_string()));
        }
        Ok(r)
    }

    fn need(&self, key: &'static str) -> Result<&str, ReportError> {
        self.get(key).ok_or(ReportError::Missing(key))
    }
}

fn rationals(v: &[Rational]) -> String {
    v.iter()
        .map(Rational::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_rationals(key: &str, s: &str) -> Result<Vec<Rational>, ReportError> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            parse_rational(t).ok_or_else(|| ReportError::Value {
                key: key.to_string(),
                message: format!("not a rational: {t}"),
            })
        })
        .collect()
}

fn set_names(x: VarSet, names: &[String]) -> String {
    x.iter()
        .map(|i| names[i].as_str())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_set(key: &str, s: &str, names: &[String]) -> Result<VarSet, ReportError> {
    let mut x = VarSet::EMPTY;
    for t in s.split(',').filter(|t| !t.is_empty()) {
        let i = names
            .iter()
            .position(|n| n == t)
            .ok_or_else(|| ReportError::Value {
                key: key.to_string(),
                message: format!("unknown variable {t}"),
            })?;
        x.insert(i);
    }
    Ok(x)
}

fn push_certificate(r: &mut Report, c: &Certificate) {
    r.push("cone", c.cone.name());
    r.push("lambda", rationals(&c.lambda));
    r.push("mu", rationals(&c.mu));
}

fn push_function(r: &mut Report, h: &SetFunction, names: &[String]) {
    for x in VarSet::all(h.n()) {
        r.push(format!("h[{}]", set_names(x, names)), h.get(x));
    }
}

fn push_inequality(r: &mut Report, m: &MaxInequality) {
    r.push("names", m.names().join(","));
    r.push("expressions", m.exprs().len());
    r.push("variables", m.n());
    r.push("inequality", m.to_text());
}

fn names_of(r: &Report) -> Result<Vec<String>, ReportError> {
    Ok(r.need("names")?
        .split(',')
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect())
}

fn read_inequality(r: &Report) -> Result<MaxInequality, ReportError> {
    let names = names_of(r)?;
    parse_inequality_with_names(r.need("inequality")?, &names).map_err(|e| ReportError::Value {
        key: "inequality".into(),
        message: e.to_string(),
    })
}

fn read_cone(r: &Report) -> Result<ConeId, ReportError> {
    let c = r.need("cone")?;
    ConeId::from_name(c).ok_or_else(|| ReportError::Value {
        key: "cone".into(),
        message: format!("unknown cone {c}"),
    })
}

fn read_certificate(r: &Report) -> Result<Certificate, ReportError> {
    Ok(Certificate {
        cone: read_cone(r)?,
        lambda: parse_rationals("lambda", r.need("lambda")?)?,
        mu: parse_rationals("mu", r.get("mu").unwrap_or(""))?,
    })
}

fn read_function(r: &Report, names: &[String]) -> Result<SetFunction, ReportError> {
    let mut h = SetFunction::zero(names.len());
    for (k, v) in r.entries() {
        if let Some(inner) = k.strip_prefix("h[").and_then(|s| s.strip_suffix(']')) {
            let x = parse_set(k, inner, names)?;
            let val = parse_rational(v).ok_or_else(|| ReportError::Value {
                key: k.clone(),
                message: "not a rational".into(),
            })?;
            h.set(x, val);
        }
    }
    Ok(h)
}

/// Report for a decided max-inequality.
pub fn inequality_report(m: &MaxInequality, cone: ConeId, result: &DecisionResult) -> Report {
    let mut r = Report::new("inequality");
    push_inequality(&mut r, m);
    match result {
        DecisionResult::Valid(c) => {
            r.push("result", "valid");
            push_certificate(&mut r, c);
        }
        DecisionResult::Invalid(cex) => {
            r.push("result", "invalid");
            r.push("cone", cone.name());
            for (w, c) in &cex.weights {
                r.push("step", format!("{}:{c}", set_names(*w, m.names())));
            }
            push_function(&mut r, &cex.h, m.names());
        }
    }
    r
}

/// Report for a containment verdict.
pub fn containment_report(v: &ContainmentVerdict) -> Report {
    let mut r = Report::new("containment");
    r.push("outcome", v.outcome.name());
    if let Some(reason) = &v.reason {
        r.push("reason", reason.code());
        r.push("reason_detail", reason.detail());
    }
    r.push("chordal", v.class.chordal);
    r.push("acyclic", v.class.acyclic);
    r.push("simple", v.class.simple);
    r.push("totally_disconnected", v.class.totally_disconnected);
    r.push("q1", &v.q1);
    r.push("q2", &v.q2);
    r.push("homomorphisms", v.homomorphisms);
    if let Some(t) = &v.decomposition {
        let bags: Vec<String> = t
            .bags()
            .iter()
            .map(|b| set_names(*b, &v.q2.var_names()))
            .collect();
        r.push("bags", bags.join(" | "));
    }
    if let Some(agree) = v.cones_agree {
        r.push("cones_agree", agree);
    }
    if let Some(m) = &v.inequality {
        push_inequality(&mut r, m);
    }
    if let Some(c) = &v.certificate {
        push_certificate(&mut r, c);
    }
    if let Some(w) = &v.witness {
        r.push("witness_source", w.source.name());
        r.push("witness_verified", w.verified);
        r.push("witness_annotated", w.annotated);
        r.push("witness_size", w.size);
        if let Some(h) = w.homs {
            r.push("witness_homs", h);
        }
        if let Some(spec) = &w.spec {
            for (x, m) in spec.factors() {
                r.push(
                    "witness_factor",
                    format!("{}:{m}", set_names(*x, spec.names())),
                );
            }
        }
        if let Some(p) = &w.relation {
            r.push("witness_columns", p.columns().join(","));
            for row in p.rows() {
                r.push(
                    "witness_row",
                    row.iter().map(u32::to_string).collect::<Vec<_>>().join(","),
                );
            }
        }
    }
    for (stage, d) in &v.timings {
        r.push(format!("time_us.{stage}"), d.as_micros());
    }
    r
}

/// What [`recheck`] confirmed. `None` means the report had nothing of
/// that kind to check.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Recheck {
    pub certificate: Option<bool>,
    pub counterexample: Option<bool>,
    pub witness: Option<bool>,
}

impl Recheck {
    pub fn all_ok(&self) -> bool {
        [self.certificate, self.counterexample, self.witness]
            .iter()
            .all(|c| c.unwrap_or(true))
    }

    pub fn checked_anything(&self) -> bool {
        self.certificate.is_some() || self.counterexample.is_some() || self.witness.is_some()
    }
}

/// Re-verify the certificate, counterexample or witness in a parsed report.
pub fn recheck(r: &Report) -> Result<Recheck, ReportError> {
    let mut out = Recheck::default();
    match r.kind() {
        "inequality" => {
            let m = read_inequality(r)?;
            match r.need("result")? {
                "valid" => out.certificate = Some(verify_certificate(&m, &read_certificate(r)?)),
                _ => {
                    let h = read_function(r, m.names())?;
                    let cex = Counterexample {
                        cone: read_cone(r)?,
                        h,
                        weights: Vec::new(),
                    };
                    out.counterexample = Some(verify_counterexample(&m, &cex));
                }
            }
        }
        "containment" => {
            if r.get("lambda").is_some() {
                let m = read_inequality(r)?;
                let ok = verify_certificate(&m, &read_certificate(r)?);
                out.certificate = Some(ok);
            }
            if r.get("witness_columns").is_some() && r.get("witness_verified") == Some("true") {
                let query = |key: &'static str| {
                    parse_query(r.need(key)?, None).map_err(|e| ReportError::Value {
                        key: key.into(),
                        message: e.to_string(),
                    })
                };
                let (q1, q2) = (query("q1")?, query("q2")?);
                let cols: Vec<String> = r
                    .need("witness_columns")?
                    .split(',')
                    .map(str::to_string)
                    .collect();
                let rows = r
                    .get_all("witness_row")
                    .map(|row| {
                        row.split(',')
                            .map(|t| t.parse::<u32>())
                            .collect::<Result<Vec<u32>, _>>()
                            .map_err(|_| ReportError::Value {
                                key: "witness_row".into(),
                                message: row.to_string(),
                            })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let p = VRelation::from_rows(cols, rows).map_err(|e| ReportError::Value {
                    key: "witness_row".into(),
                    message: e.to_string(),
                })?;
                let ok = match recheck_witness(&q1, &q2, &p) {
                    Ok(Some(h)) => {
                        (p.len() as u128) > h
                            && r.get("witness_homs") == Some(h.to_string().as_str())
                    }
                    _ => false,
                };
                out.witness = Some(ok);
            }
        }
        other => return Err(ReportError::Kind(other.to_string())),
    }
    Ok(out)
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bagcq::containment::{search_normal_witness, search_product_witness, Witness};
use bagcq::inequality::{decide_max_with, parse_inequality, DecideOptions};
use bagcq::polymatroid::{entropy_of_relation, is_normal, is_polymatroid, mobius_inverse};
use bagcq::reduction::{
    build_queries, default_construction, size_report, verify_built, Construction, MiipInstance,
    ReductionError, DEFAULT_MAX_EXPRS, DEFAULT_MAX_VARS,
};
use bagcq::report::{containment_report, inequality_report, recheck, Report};
use bagcq::structures::count_homomorphisms_capped;
use bagcq::{
    decide_containment, parse_query, ConeId, ConjunctiveQuery, Outcome, PipelineConfig,
    RelationalStructure, VRelation,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

mod selftest;

/// Exit status for errors of any kind (parse, I/O, caps, usage).
const EXIT_ERROR: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "bagcq",
    version,
    about = "Bag-set containment of conjunctive queries"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Seed for generated test cases.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Largest witness relation materialized, in tuples.
    #[arg(long, global = true, default_value_t = 4096, value_parser = clap::value_parser!(u64).range(1..))]
    witness_cap: u64,
    /// Node budget for homomorphism search and counting.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    hom_node_cap: Option<u64>,
    /// Junction trees enumerated when looking for a simple one.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    jt_limit: Option<u64>,
    /// Include per-stage timings in reports (makes output run-dependent).
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    /// Aligned `key  value` lines.
    Text,
    /// `key=value` lines that `bagcq recheck` can re-verify.
    Structured,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Cone {
    Polymatroid,
    Normal,
    Modular,
}

impl From<Cone> for ConeId {
    fn from(c: Cone) -> ConeId {
        match c {
            Cone::Polymatroid => ConeId::Polymatroid,
            Cone::Normal => ConeId::Normal,
            Cone::Modular => ConeId::Modular,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide Q1 ⊑ Q2 under bag-set semantics. Exit 0 contained, 1 not, 2 unknown.
    Decide {
        q1: PathBuf,
        q2: PathBuf,
        /// Take the max over all enumerated junction trees.
        #[arg(long)]
        all_trees: bool,
    },
    /// Decide `0 <= E` or `0 <= max { E ; ... }`. Exit 0 valid, 1 invalid.
    CheckInequality {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Cone::Polymatroid)]
        cone: Cone,
    },
    /// Search product and normal witnesses directly. Exit 1 found, 0 none.
    FindWitness {
        q1: PathBuf,
        q2: PathBuf,
        /// Largest column size for product witnesses.
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
        max_product: u32,
        /// Largest number of step factors for normal witnesses.
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
        max_normal: u32,
    },
    /// Build a query pair from an integer max-linear inequality and verify it.
    ReduceMiip {
        file: PathBuf,
        /// Use the uniform construction even for one expression.
        #[arg(long)]
        uniform: bool,
        /// Write q1.cq, q2.cq, manifest.txt and verification.txt here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_EXPRS)]
        max_exprs: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_VARS)]
        max_vars: usize,
    },
    /// Entropies of the uniform distribution on a relation's rows.
    Entropy { relation: PathBuf },
    /// Count homomorphisms from a query into a database.
    HomCount { query: PathBuf, database: PathBuf },
    /// Re-verify the certificate or witness in a structured report.
    Recheck { report: PathBuf },
    /// Run the built-in checks plus seeded random cases.
    SelfTest {
        /// Random containment cases to cross-check.
        #[arg(long, default_value_t = 40)]
        cases: usize,
    },
}

/// A failure that maps to [`EXIT_ERROR`].
#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure(e.to_string())
    }
}

type Run = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn read_query(path: &Path) -> Result<ConjunctiveQuery, Failure> {
    parse_query(&read(path)?, None).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

impl Global {
    fn pipeline(&self) -> PipelineConfig {
        let mut cfg = PipelineConfig {
            witness_size_cap: self.witness_cap,
            ..PipelineConfig::default()
        };
        if let Some(c) = self.hom_node_cap {
            cfg.hom_node_cap = c;
        }
        if let Some(l) = self.jt_limit {
            cfg.jt_limit = l as usize;
        }
        cfg
    }

    fn emit(&self, r: &Report) {
        let mut r = r.clone();
        if !self.timings {
            let kept: Vec<(String, String)> = r
                .entries()
                .iter()
                .filter(|(k, _)| !k.starts_with("time_us."))
                .cloned()
                .collect();
            r = Report::default();
            for (k, v) in kept {
                r.push(k, v);
            }
        }
        match self.format {
            Format::Text => print!("{}", r.to_human()),
            Format::Structured => print!("{}", r.to_text()),
        }
    }
}

fn decide(g: &Global, q1: &Path, q2: &Path, all_trees: bool) -> Run {
    let (q1, q2) = (read_query(q1)?, read_query(q2)?);
    let cfg = PipelineConfig {
        all_junction_trees: all_trees,
        ..g.pipeline()
    };
    let v = decide_containment(&q1, &q2, &cfg)?;
    g.emit(&containment_report(&v));
    if g.format == Format::Text {
        if let Some(p) = v.witness.as_ref().and_then(|w| w.relation.as_ref()) {
            print!("witness relation:\n{}", p.to_text());
        }
    }
    Ok(match v.outcome {
        Outcome::Contained => 0,
        Outcome::NotContained => 1,
        Outcome::Unknown => 2,
    })
}

fn check_inequality(g: &Global, file: &Path, cone: Cone) -> Run {
    let m =
        parse_inequality(&read(file)?).map_err(|e| Failure(format!("{}: {e}", file.display())))?;
    let cone = ConeId::from(cone);
    let result = decide_max_with(&m, cone, &DecideOptions::default())?;
    g.emit(&inequality_report(&m, cone, &result));
    Ok(if result.is_valid() { 0 } else { 1 })
}

fn witness_report(w: &Witness) -> Report {
    let mut r = Report::new("witness");
    r.push("witness_source", w.source.name());
    r.push("witness_verified", w.verified);
    r.push("witness_size", w.size);
    if let Some(h) = w.homs {
        r.push("witness_homs", h);
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
    r
}

fn find_witness(g: &Global, q1: &Path, q2: &Path, max_product: u32, max_normal: u32) -> Run {
    let (q1, q2) = (read_query(q1)?, read_query(q2)?);
    let found = match search_product_witness(&q1, &q2, max_product)? {
        Some(w) => Some(w),
        None => search_normal_witness(&q1, &q2, max_normal)?,
    };
    match found {
        Some(w) => {
            let mut r = witness_report(&w);
            r.push("q1", &q1);
            r.push("q2", &q2);
            g.emit(&r);
            if g.format == Format::Text {
                if let Some(p) = &w.relation {
                    print!("witness relation:\n{}", p.to_text());
                }
            }
            Ok(1)
        }
        None => {
            let mut r = Report::new("witness");
            r.push("found", false);
            r.push("max_product", max_product);
            r.push("max_normal", max_normal);
            g.emit(&r);
            Ok(0)
        }
    }
}

fn reduce_miip(
    g: &Global,
    file: &Path,
    uniform: bool,
    out: Option<&Path>,
    max_exprs: usize,
    max_vars: usize,
) -> Run {
    let ineq =
        parse_inequality(&read(file)?).map_err(|e| Failure(format!("{}: {e}", file.display())))?;
    let m = MiipInstance::from_inequality(&ineq)?;
    let construction = if uniform {
        Construction::Uniform
    } else {
        default_construction(&m)
    };
    let sizes = size_report(&m, construction);
    if let Err(e) = m.check_caps(max_exprs, max_vars) {
        eprintln!("refused: {e}");
        eprintln!("{}", sizes.to_text());
        return Ok(EXIT_ERROR);
    }
    let b = build_queries(&m, construction)?;
    let check = match verify_built(&b, 1_000_000) {
        Ok(c) => Some(c),
        Err(ReductionError::TooWide(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let verification = match &check {
        Some(c) => c.to_text(),
        None => format!(
            "passes=skipped\nreason=Q1 has {} variables\n",
            b.q1.num_vars()
        ),
    };
    let mut r = Report::new("reduction");
    for part in sizes.to_text().split_whitespace() {
        if let Some((k, v)) = part.split_once('=') {
            r.push(k, v);
        }
    }
    r.push("q1", b.q1.to_text());
    r.push("q2", b.q2.to_text());
    for line in verification.lines() {
        if let Some((k, v)) = line.split_once('=') {
            r.push(k, v);
        }
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("q1.cq"), format!("{}\n", b.q1.to_text()))?;
        fs::write(dir.join("q2.cq"), format!("{}\n", b.q2.to_text()))?;
        fs::write(dir.join("manifest.txt"), b.manifest())?;
        fs::write(dir.join("verification.txt"), &verification)?;
        r.push("written", dir.display());
    }
    g.emit(&r);
    Ok(match &check {
        Some(c) if c.passes() => 0,
        Some(_) => 1,
        None => 2,
    })
}

fn entropy(g: &Global, path: &Path) -> Run {
    let p = VRelation::from_text(&read(path)?)?;
    let e = entropy_of_relation(&p)?;
    let mut r = Report::new("entropy");
    r.push("columns", p.columns().join(","));
    r.push("rows", p.len());
    for x in bagcq::VarSet::all(p.arity()).skip(1) {
        let names: Vec<&str> = x.iter().map(|i| p.columns()[i].as_str()).collect();
        r.push(format!("h[{}]", names.join(",")), e.get(x));
    }
    // exact algebra only when every value is a small-denominator rational
    let h = e.rationalize(1 << 20);
    if h.to_f64()
        .values()
        .iter()
        .zip(e.values())
        .all(|(a, b)| (a - b).abs() < 1e-12)
    {
        let gm = mobius_inverse(&h);
        for x in bagcq::VarSet::all(p.arity()).skip(1) {
            let names: Vec<&str> = x.iter().map(|i| p.columns()[i].as_str()).collect();
            r.push(format!("g[{}]", names.join(",")), gm.get(x));
        }
        r.push("polymatroid", is_polymatroid(&h));
        r.push("normal", is_normal(&h));
    }
    g.emit(&r);
    Ok(0)
}

fn hom_count(g: &Global, query: &Path, database: &Path) -> Run {
    let q = read_query(query)?;
    let d = RelationalStructure::from_text(&read(database)?)?;
    let cap = g.pipeline().hom_node_cap;
    let n = count_homomorphisms_capped(&q, &d, cap)?;
    let mut r = Report::new("hom-count");
    r.push("query", &q);
    r.push("count", n);
    g.emit(&r);
    Ok(0)
}

fn recheck_cmd(g: &Global, path: &Path) -> Run {
    let report = Report::parse(&read(path)?)?;
    let c = recheck(&report)?;
    let mut r = Report::new("recheck");
    r.push("report_kind", report.kind());
    for (k, v) in [
        ("certificate", c.certificate),
        ("counterexample", c.counterexample),
        ("witness", c.witness),
    ] {
        if let Some(ok) = v {
            r.push(k, ok);
        }
    }
    g.emit(&r);
    Ok(match (c.checked_anything(), c.all_ok()) {
        (false, _) => 2,
        (true, true) => 0,
        (true, false) => 1,
    })
}

fn run(cli: Cli) -> Run {
    if let Some(w) = cli.global.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w as usize)
            .build_global()?;
    }
    let g = &cli.global;
    match &cli.command {
        Command::Decide { q1, q2, all_trees } => decide(g, q1, q2, *all_trees),
        Command::CheckInequality { file, cone } => check_inequality(g, file, *cone),
        Command::FindWitness {
            q1,
            q2,
            max_product,
            max_normal,
        } => find_witness(g, q1, q2, *max_product, *max_normal),
        Command::ReduceMiip {
            file,
            uniform,
            out,
            max_exprs,
            max_vars,
        } => reduce_miip(g, file, *uniform, out.as_deref(), *max_exprs, *max_vars),
        Command::Entropy { relation } => entropy(g, relation),
        Command::HomCount { query, database } => hom_count(g, query, database),
        Command::Recheck { report } => recheck_cmd(g, report),
        Command::SelfTest { cases } => selftest::run(g.seed, *cases, &g.pipeline()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_ERROR);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

//! The `htr` command line.
//!
//! Every command prints (or writes to `--out`) a JSON envelope
//! `{command, version, seed, tolerances, result}`, or CSV rows with the
//! frozen column set [`CSV_COLUMNS`] preceded by `#` comment lines carrying
//! the same metadata.
//!
//! Exit codes: 0 success, 2 precondition violation (including usage errors
//! and failed verification), 3 I/O or parse error.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng as _, SeedableRng};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bound2222::{self, bound_tensor, Branch};
use crate::certify::{self, Method, TypicalityConfig};
use crate::decomposition::{Decomposition, DecompositionFile};
use crate::error::{HtrError, Result};
use crate::field::{Field, Scalar, Sign};
use crate::higher::{self, decompose_higher, mode_group_bound, order4_inner, Construction};
use crate::io::{parse_tensor, read_tensor};
use crate::pencil::{self, delta, dot, is_nonsingular_pair, theta};
use crate::rank222::{self, classify, decompose222};
use crate::tensor::{QuadTensor, SlicePair, Tensor};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Column order of every CSV the tool writes.
pub const CSV_COLUMNS: [&str; 12] = [
    "index",
    "order",
    "field",
    "delta",
    "delta_sign",
    "rank",
    "bound_terms",
    "bound_claimed",
    "branch",
    "residual",
    "min_f",
    "conclusion",
];

const AFTER_HELP: &str = "CSV columns: index, order, field, delta, delta_sign, rank, bound_terms, \
bound_claimed, branch, residual, min_f, conclusion. Empty cells mean not applicable. \
Exit codes: 0 success, 2 precondition violation, 3 I/O or parse error.";

#[derive(Debug, Parser)]
#[command(name = "htr", version, about = "Ranks of 2x...x2 tensors over the reals and complexes", after_help = AFTER_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Δ, Θ, the polarized determinant and nonsingularity of an order-3 tensor.
    Delta(IoArgs),
    /// Exact rank and a minimal decomposition of an order-3 tensor.
    Rank222(IoArgs),
    /// Constructive upper bound: order 4 (5 real / 4 complex terms) or higher.
    Bound(IoArgs),
    /// Multistart search for a real 4-term decomposition of an order-4 tensor.
    Certify(CertifyArgs),
    /// Monte Carlo outcomes over Gaussian tensors.
    Sample(SampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct IoArgs {
    /// Tensor JSON file: {"order": n, "field": "real"|"complex", "data": [...]}.
    #[arg(long, conflicts_with = "tensor")]
    pub input: Option<PathBuf>,
    /// Inline tensor JSON, same layout as --input.
    #[arg(long)]
    pub tensor: Option<String>,
    /// Field the rank is taken over; a complex tensor forces complex.
    #[arg(long, default_value = "real")]
    pub field: Field,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Recompute the residual of the emitted decomposition. Bare: check the
    /// output just produced. With a path: check that earlier JSON output
    /// against the input tensor without rerunning the command.
    #[arg(long, num_args = 0..=1, value_name = "PATH")]
    pub verify: Option<Option<PathBuf>>,
}

#[derive(Debug, Clone, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[arg(long, default_value_t = 1000)]
    pub restarts: usize,
    /// nelder-mead or bfgs.
    #[arg(long, default_value = "nelder-mead")]
    pub method: Method,
    /// Best values at or above this support a rank-5 candidate.
    #[arg(long, default_value_t = certify::DEFAULT_FLOOR)]
    pub floor: f64,
    #[arg(long, default_value_t = certify::DEFAULT_MIN_RESTARTS)]
    pub min_restarts: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    /// 3, 4, 5 or 6.
    #[arg(long)]
    pub order: usize,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "real")]
    pub field: Field,
    /// Certificate restarts per real order-4 sample (0 skips the search).
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value = "nelder-mead")]
    pub method: Method,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

/// One CSV row; `None` cells print empty.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Row {
    pub index: usize,
    pub order: usize,
    pub field: Option<Field>,
    pub delta: Option<f64>,
    pub delta_sign: Option<Sign>,
    pub rank: Option<u8>,
    pub bound_terms: Option<usize>,
    pub bound_claimed: Option<usize>,
    pub branch: Option<String>,
    pub residual: Option<f64>,
    pub min_f: Option<f64>,
    pub conclusion: Option<String>,
}

impl Row {
    fn cells(&self) -> [String; 12] {
        fn opt<T: ToString>(x: &Option<T>) -> String {
            x.as_ref().map(T::to_string).unwrap_or_default()
        }
        fn num(x: Option<f64>) -> String {
            x.map(|v| format!("{v:e}")).unwrap_or_default()
        }
        let sign = self.delta_sign.map(|s| {
            match s {
                Sign::Negative => "negative",
                Sign::Zero => "zero",
                Sign::Positive => "positive",
            }
            .to_string()
        });
        [
            self.index.to_string(),
            self.order.to_string(),
            opt(&self.field),
            num(self.delta),
            sign.unwrap_or_default(),
            opt(&self.rank),
            opt(&self.bound_terms),
            opt(&self.bound_claimed),
            opt(&self.branch),
            num(self.residual),
            num(self.min_f),
            opt(&self.conclusion),
        ]
    }
}

/// A command's payload before it is rendered.
struct Output {
    command: &'static str,
    seed: u64,
    tolerances: Value,
    result: Value,
    rows: Vec<Row>,
}

impl Output {
    fn envelope(&self) -> Value {
        json!({
            "command": self.command,
            "version": crate::VERSION,
            "seed": self.seed,
            "tolerances": self.tolerances,
            "result": self.result,
        })
    }

    fn render(&self, format: Format) -> Result<String> {
        Ok(match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.envelope())?;
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut s = String::new();
                let _ = writeln!(
                    s,
                    "# htr {} command={} seed={}",
                    crate::VERSION,
                    self.command,
                    self.seed
                );
                let _ = writeln!(s, "# tolerances={}", self.tolerances);
                s.push_str(&CSV_COLUMNS.join(","));
                s.push('\n');
                for r in &self.rows {
                    s.push_str(&r.cells().join(","));
                    s.push('\n');
                }
                s
            }
        })
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_PRECONDITION
            } else {
                EXIT_OK
            };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("htr: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &HtrError) -> i32 {
    match e {
        HtrError::Io(_) | HtrError::Json(_) => EXIT_IO,
        _ => EXIT_PRECONDITION,
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let io = match &cli.command {
        Command::Delta(io) | Command::Rank222(io) | Command::Bound(io) => io,
        Command::Certify(c) => &c.io,
        Command::Sample(s) => return emit(&cmd_sample(s)?, s.format, s.out.as_deref()),
    };
    let tensor = load_input(io)?;
    if let Some(Some(path)) = &io.verify {
        let text = std::fs::read_to_string(path)?;
        let v = verify_envelope(&serde_json::from_str(&text)?, &tensor)?;
        return finish_verify(&v);
    }
    let out = match &cli.command {
        Command::Delta(_) => cmd_delta(&tensor)?,
        Command::Rank222(io) => cmd_rank222(&tensor, io.field)?,
        Command::Bound(io) => cmd_bound(&tensor, io.field, io.seed)?,
        Command::Certify(c) => cmd_certify(&tensor, c)?,
        Command::Sample(_) => unreachable!("handled above"),
    };
    if io.verify.is_some() && io.format == Format::Csv {
        return Err(HtrError::Precondition(
            "--verify reads JSON output; use --format json".into(),
        ));
    }
    emit(&out, io.format, io.out.as_deref())?;
    if io.verify.is_some() {
        let text = match &io.out {
            Some(p) => std::fs::read_to_string(p)?,
            None => out.render(Format::Json)?,
        };
        let v = verify_envelope(&serde_json::from_str(&text)?, &tensor)?;
        return finish_verify(&v);
    }
    Ok(())
}

fn emit(out: &Output, format: Format, path: Option<&Path>) -> Result<()> {
    let text = out.render(format)?;
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load_input(io: &IoArgs) -> Result<Tensor> {
    match (&io.input, &io.tensor) {
        (Some(p), _) => read_tensor(p),
        (None, Some(text)) => parse_tensor(text),
        (None, None) => Err(HtrError::Precondition(
            "an input tensor is required (--input or --tensor)".into(),
        )),
    }
}

/// Result of re-checking a decomposition stored in an output envelope.
#[derive(Debug, Clone, Serialize)]
pub struct Verification {
    pub command: String,
    pub terms: usize,
    pub residual: f64,
    pub relative_residual: f64,
    pub tolerance: f64,
    pub ok: bool,
}

pub fn verify_envelope(envelope: &Value, tensor: &Tensor) -> Result<Verification> {
    let command = envelope["command"].as_str().unwrap_or_default().to_string();
    let raw = envelope
        .pointer("/result/decomposition")
        .filter(|v| !v.is_null())
        .ok_or_else(|| {
            HtrError::Precondition(format!("`{command}` output carries no decomposition"))
        })?;
    let file: DecompositionFile = serde_json::from_value(raw.clone())?;
    let dec = Decomposition::try_from(file)?;
    let tolerance = if command == "certify" {
        certify::CERTIFICATE_REL_TOL
    } else {
        higher::ACCEPT_REL_RESIDUAL
    };
    let residual = dec.residual(tensor)?;
    let relative_residual = dec.relative_residual(tensor)?;
    Ok(Verification {
        command,
        terms: dec.len(),
        residual,
        relative_residual,
        tolerance,
        ok: relative_residual <= tolerance,
    })
}

fn finish_verify(v: &Verification) -> Result<()> {
    eprintln!("{}", serde_json::to_string(v)?);
    if v.ok {
        Ok(())
    } else {
        Err(HtrError::Precondition(format!(
            "verification failed: relative residual {:e} exceeds {:e}",
            v.relative_residual, v.tolerance
        )))
    }
}

/// Real tensors print scalars as numbers, complex ones as `[re, im]`.
fn scalar_value(z: Scalar, field: Field) -> Value {
    match field {
        Field::Real => json!(z.re),
        Field::Complex => json!([z.re, z.im]),
    }
}

fn order3_tolerances() -> Value {
    json!({
        "delta_rel": pencil::DELTA_REL_TOL,
        "theta_rel": pencil::THETA_REL_TOL,
        "det_rel": pencil::DET_REL_TOL,
        "rank_one_rel": rank222::RANK_ONE_REL_TOL,
    })
}

fn bound_tolerances() -> Value {
    json!({
        "accept_rel_residual_order4": bound2222::ACCEPT_REL_RESIDUAL,
        "accept_rel_residual_higher": higher::ACCEPT_REL_RESIDUAL,
        "shift_score": bound2222::SHIFT_SCORE,
        "stable_margin": higher::STABLE_MARGIN,
        "delta_rel": pencil::DELTA_REL_TOL,
    })
}

fn certify_tolerances(floor: f64, min_restarts: usize) -> Value {
    json!({
        "moment_rel": certify::MOMENT_REL_TOL,
        "unfolding_rel": certify::UNFOLDING_REL_TOL,
        "interior_rel": certify::INTERIOR_REL_TOL,
        "certificate_rel": certify::CERTIFICATE_REL_TOL,
        "floor": floor,
        "min_restarts": min_restarts,
    })
}

fn order3(t: &Tensor) -> Result<SlicePair> {
    if t.order() != 3 {
        return Err(HtrError::OrderMismatch {
            expected: 3,
            got: t.order(),
        });
    }
    SlicePair::from_tensor(t)
}

pub fn cmd_delta_value(t: &Tensor) -> Result<Value> {
    let p = order3(t)?;
    let field = t.field();
    let d = delta(&p.a, &p.b);
    Ok(json!({
        "field": field,
        "delta": scalar_value(d.value, field),
        "delta_sign": d.sign,
        "delta_tol": d.tol,
        "theta": scalar_value(theta(&p.a, &p.b), field),
        "theta_tol": pencil::theta_tol(&p.a, &p.b),
        "dot": scalar_value(dot(&p.a, &p.b), field),
        "nonsingular": is_nonsingular_pair(&p.a, &p.b, Field::Real.join(field)),
    }))
}

fn cmd_delta(t: &Tensor) -> Result<Output> {
    let result = cmd_delta_value(t)?;
    let p = order3(t)?;
    let d = delta(&p.a, &p.b);
    Ok(Output {
        command: "delta",
        seed: 0,
        tolerances: order3_tolerances(),
        rows: vec![Row {
            order: 3,
            field: Some(t.field()),
            delta: (t.field() == Field::Real).then_some(d.value.re),
            delta_sign: d.sign,
            ..Row::default()
        }],
        result,
    })
}

fn cmd_rank222(t: &Tensor, field: Field) -> Result<Output> {
    let p = order3(t)?;
    let field = field.join(t.field());
    let report = classify(&p, field);
    let dec = decompose222(&p, field);
    let residual = dec.relative_residual(t)?;
    let row = Row {
        order: 3,
        field: Some(field),
        delta: report.delta.sign.map(|_| report.delta.value.re),
        delta_sign: report.delta.sign,
        rank: Some(report.rank),
        bound_terms: Some(dec.len()),
        residual: Some(residual),
        ..Row::default()
    };
    Ok(Output {
        command: "rank222",
        seed: 0,
        tolerances: order3_tolerances(),
        result: json!({
            "report": report,
            "terms": dec.len(),
            "relative_residual": residual,
            "decomposition": DecompositionFile::from(&dec),
        }),
        rows: vec![row],
    })
}

/// Bound by order and field, as used by `bound` and `sample`.
#[derive(Debug, Clone)]
pub struct AnyBound {
    pub decomposition: Decomposition,
    pub bound_claimed: usize,
    pub branch: String,
    pub relative_residual: f64,
}

pub fn bound_any(t: &Tensor, field: Field, seed: u64) -> Result<AnyBound> {
    let field = field.join(t.field());
    let (decomposition, bound_claimed, branch) = match (t.order(), field) {
        (4, _) => {
            let b = bound_tensor(t, field, seed)?;
            (
                b.decomposition,
                b.bound_claimed,
                b.branch.as_str().to_string(),
            )
        }
        (3, _) => {
            let d = decompose222(&SlicePair::from_tensor(t)?, field);
            (d, 3, Branch::Direct.as_str().to_string())
        }
        (_, Field::Real) => {
            let h = decompose_higher(t, Field::Real)?;
            (
                h.decomposition,
                h.bound,
                construction_name(h.construction).to_string(),
            )
        }
        (2, Field::Complex) => {
            let h = mode_group_bound(t, 1, &|_: &Tensor| {
                unreachable!("vectors need no inner decomposer")
            })?;
            (
                h.decomposition,
                h.bound,
                construction_name(h.construction).to_string(),
            )
        }
        (_, Field::Complex) => {
            let h = mode_group_bound(t, 4, &order4_inner(Field::Complex, seed))?;
            (
                h.decomposition,
                h.bound,
                construction_name(h.construction).to_string(),
            )
        }
    };
    let relative_residual = decomposition.relative_residual(t)?;
    Ok(AnyBound {
        decomposition,
        bound_claimed,
        branch,
        relative_residual,
    })
}

fn construction_name(c: Construction) -> &'static str {
    match c {
        Construction::ModeGroup => "mode-group",
        Construction::Stabilized => "stabilized",
        Construction::Direct => "direct",
    }
}

fn cmd_bound(t: &Tensor, field: Field, seed: u64) -> Result<Output> {
    let field = field.join(t.field());
    let b = bound_any(t, field, seed)?;
    Ok(Output {
        command: "bound",
        seed,
        tolerances: bound_tolerances(),
        result: json!({
            "order": t.order(),
            "field": field,
            "terms": b.decomposition.len(),
            "bound_claimed": b.bound_claimed,
            "branch": b.branch,
            "relative_residual": b.relative_residual,
            "decomposition": DecompositionFile::from(&b.decomposition),
        }),
        rows: vec![Row {
            order: t.order(),
            field: Some(field),
            bound_terms: Some(b.decomposition.len()),
            bound_claimed: Some(b.bound_claimed),
            branch: Some(b.branch),
            residual: Some(b.relative_residual),
            ..Row::default()
        }],
    })
}

fn real_quad(t: &Tensor, field: Field) -> Result<QuadTensor> {
    if t.order() != 4 {
        return Err(HtrError::OrderMismatch {
            expected: 4,
            got: t.order(),
        });
    }
    if field.join(t.field()) != Field::Real {
        return Err(HtrError::FieldMismatch {
            expected: Field::Real,
            got: Field::Complex,
        });
    }
    QuadTensor::from_tensor(t)
}

fn cmd_certify(t: &Tensor, c: &CertifyArgs) -> Result<Output> {
    let q = real_quad(t, c.io.field)?;
    let cfg = TypicalityConfig {
        restarts: c.restarts,
        seed: c.io.seed,
        method: c.method,
        floor: c.floor,
        min_restarts: c.min_restarts,
        ..Default::default()
    };
    let report = certify::typicality_report(&q, &cfg)?;
    let row = Row {
        order: 4,
        field: Some(Field::Real),
        bound_terms: report.decomposition.as_ref().map(|d| d.terms.len()),
        residual: Some(report.residual),
        min_f: Some(report.min_f),
        conclusion: Some(report.conclusion.as_str().to_string()),
        ..Row::default()
    };
    Ok(Output {
        command: "certify",
        seed: c.io.seed,
        tolerances: certify_tolerances(c.floor, c.min_restarts),
        result: serde_json::to_value(&report)?,
        rows: vec![row],
    })
}

/// Gaussian tensor for sample `index`: depends only on `(seed, index)`.
pub fn gaussian_sample(order: usize, field: Field, seed: u64, index: usize) -> Tensor {
    let mut rng = crate::Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let data = (0..1usize << order)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = match field {
                Field::Real => 0.0,
                Field::Complex => rng.sample(StandardNormal),
            };
            Scalar::new(re, im)
        })
        .collect();
    Tensor::from_data(order, field, data).expect("length matches order")
}

pub fn sample_row(s: &SampleArgs, index: usize) -> Result<Row> {
    let t = gaussian_sample(s.order, s.field, s.seed, index);
    let mut row = Row {
        index,
        order: s.order,
        field: Some(s.field),
        ..Row::default()
    };
    if s.order == 3 {
        let p = SlicePair::from_tensor(&t)?;
        let report = classify(&p, s.field);
        row.delta = report.delta.sign.map(|_| report.delta.value.re);
        row.delta_sign = report.delta.sign;
        row.rank = Some(report.rank);
    }
    let b = bound_any(&t, s.field, s.seed)?;
    row.bound_terms = Some(b.decomposition.len());
    row.bound_claimed = Some(b.bound_claimed);
    row.branch = Some(b.branch);
    row.residual = Some(b.relative_residual);
    if s.order == 4 && s.field == Field::Real && s.restarts > 0 {
        let q = QuadTensor::from_tensor(&t)?;
        let cfg = TypicalityConfig {
            restarts: s.restarts,
            seed: s.seed.wrapping_add(index as u64),
            method: s.method,
            ..Default::default()
        };
        match certify::typicality_report(&q, &cfg) {
            Ok(r) => {
                row.min_f = Some(r.min_f);
                row.conclusion = Some(r.conclusion.as_str().to_string());
            }
            Err(HtrError::SingularUnfolding(_)) => {
                row.conclusion = Some("singular-unfolding".into())
            }
            Err(e) => return Err(e),
        }
    }
    Ok(row)
}

fn cmd_sample(s: &SampleArgs) -> Result<Output> {
    if !(3..=6).contains(&s.order) {
        return Err(HtrError::UnsupportedOrder(s.order));
    }
    if s.count == 0 {
        return Err(HtrError::Precondition("--count must be at least 1".into()));
    }
    let rows = (0..s.count)
        .into_par_iter()
        .map(|i| sample_row(s, i))
        .collect::<Result<Vec<_>>>()?;
    let mut ranks = std::collections::BTreeMap::<String, usize>::new();
    let mut conclusions = std::collections::BTreeMap::<String, usize>::new();
    for r in &rows {
        if let Some(k) = r.rank {
            *ranks.entry(k.to_string()).or_default() += 1;
        }
        if let Some(c) = &r.conclusion {
            *conclusions.entry(c.clone()).or_default() += 1;
        }
    }
    let max_terms = rows.iter().filter_map(|r| r.bound_terms).max();
    let max_residual = rows.iter().filter_map(|r| r.residual).fold(0.0, f64::max);
    let mut tolerances = bound_tolerances();
    if s.order == 3 {
        tolerances = order3_tolerances();
    }
    if s.order == 4 && s.field == Field::Real && s.restarts > 0 {
        tolerances["certify"] =
            certify_tolerances(certify::DEFAULT_FLOOR, certify::DEFAULT_MIN_RESTARTS);
    }
    Ok(Output {
        command: "sample",
        seed: s.seed,
        tolerances,
        result: json!({
            "order": s.order,
            "field": s.field,
            "count": s.count,
            "restarts": s.restarts,
            "rank_counts": ranks,
            "conclusion_counts": conclusions,
            "max_bound_terms": max_terms,
            "max_relative_residual": max_residual,
            "rows": rows,
        }),
        rows,
    })
}

//! `heckelift`: expansions, operators, traces and one-shot verification.
//!
//! Exit codes: 0 when every requested check passes, 1 when a check fails or
//! a computation errors, 2 on usage errors.

mod objects;
mod output;
mod verify;

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use heckelift::borcherds::{expand_psi, BorcherdsProductData};
use heckelift::genus1::Genus1Config;
use heckelift::hecke::{hecke_integral_power, mult_hecke};
use heckelift::heegner::{class_number, trace_terms, twisted_trace, FaberJ, ModularFunction, TraceOptions};
use heckelift::zagier::{build_basis, is_admissible};
use heckelift::{CyclotomicSeries, Error, RationalSeries};
use serde_json::json;

use crate::objects::{with_level, Object};
use crate::output::Format;

#[derive(Parser)]
#[command(name = "heckelift", version, about = "Exact q-series, Hecke operators, Borcherds products and twisted traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Series are computed below q^ORDER.
    #[arg(long, global = true, default_value_t = 32)]
    order: i64,
    /// Working precision in bits for numerical traces.
    #[arg(long, global = true, default_value_t = 256)]
    prec: u32,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Curve coefficients for the genus-one levels (`curve.N = a1 a2 a3 a4 a6`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report wall-clock times; output is then no longer reproducible byte for byte.
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Print the q-expansion of a named object.
    Expand {
        #[arg(long)]
        object: Object,
    },
    /// Apply T_k(p^m) to an integral-weight form.
    Hecke {
        #[arg(long)]
        k: Option<i32>,
        #[arg(long)]
        p: u32,
        #[arg(long, default_value_t = 1)]
        m: u32,
        /// QSeries JSON file, or `-` for standard input.
        #[arg(long, conflicts_with = "object")]
        input: Option<PathBuf>,
        #[arg(long)]
        object: Option<Object>,
    },
    /// Apply the multiplicative Hecke operator to a form on Gamma_0(N).
    MultHecke {
        #[arg(long)]
        k: i32,
        #[arg(long = "N", default_value_t = 1)]
        level: u32,
        #[arg(long)]
        p: u32,
        #[arg(long, conflicts_with = "object")]
        input: Option<PathBuf>,
        #[arg(long)]
        object: Option<Object>,
    },
    /// Expand the product of f_d twisted by Delta.
    Borcherds {
        #[arg(long)]
        delta: i64,
        /// Must satisfy r^2 = Delta mod 4; defaults to Delta mod 2.
        #[arg(long)]
        r: Option<i64>,
        #[arg(long)]
        d: u32,
    },
    /// Twisted trace of a modular function over Heegner points.
    Trace {
        #[arg(long)]
        delta: i64,
        #[arg(long)]
        d: i64,
        #[arg(long = "N")]
        level: Option<i64>,
        /// Sum over Gamma_0^+(N)-classes instead of Gamma_0(N)-classes.
        #[arg(long)]
        plus: bool,
        /// One of j, Jn:<n>, haupt:<N>, fplus:<N>,<m>, fminus:<N>,<m>, fsharp:<N>,<m>.
        #[arg(long)]
        f: Object,
    },
    /// Twisted class number Tr(1), exactly.
    ClassNumber {
        #[arg(long)]
        delta: i64,
        #[arg(long)]
        d: i64,
        #[arg(long = "N", default_value_t = 1)]
        level: i64,
        #[arg(long)]
        plus: bool,
    },
    /// Verify an identity; prints one verdict per check.
    Verify(verify::VerifyArgs),
    /// CSV tables for congruence scans.
    Table(verify::TableArgs),
}

/// Why a run did not complete.
pub enum Failure {
    Usage(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::InvalidPrime { .. } | Error::Parse(_) | Error::Config(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Compute(other.to_string()),
        }
    }
}

pub type Outcome = Result<bool, Failure>;

/// Shared settings for the verbs.
pub struct Ctx {
    pub order: i64,
    pub prec: u32,
    pub format: Format,
    pub timings: bool,
    pub config: Genus1Config,
}

impl Ctx {
    pub fn emit(&self, line: String) {
        println!("{line}");
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn read_json(path: &PathBuf) -> Result<serde_json::Value, Failure> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| usage(format!("stdin: {e}")))?;
        s
    } else {
        std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?
    };
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn expand(ctx: &Ctx, object: &Object) -> Outcome {
    let s = object.series(ctx.order, &ctx.config)?;
    ctx.emit(output::series(&s, s.to_json(), ctx.format));
    Ok(true)
}

fn hecke(ctx: &Ctx, k: Option<i32>, p: u32, m: u32, input: Option<&PathBuf>, object: Option<&Object>) -> Outcome {
    let (f, k) = match (input, object) {
        (Some(path), None) => {
            let k = k.ok_or_else(|| usage("--k is required with --input"))?;
            (RationalSeries::from_json(&read_json(path)?)?, k)
        }
        (None, Some(obj)) => {
            let k = match (k, obj.weight()) {
                (Some(k), _) | (None, Some(k)) => k,
                (None, None) => return Err(usage("this object has no integral weight; pass --k")),
            };
            (obj.series(ctx.order, &ctx.config)?, k)
        }
        _ => return Err(usage("give exactly one of --input and --object")),
    };
    let out = hecke_integral_power(&f, k, p, m)?;
    ctx.emit(output::series(&out, out.to_json(), ctx.format));
    Ok(true)
}

fn mult_hecke_verb(ctx: &Ctx, k: i32, level: u32, p: u32, input: Option<&PathBuf>, object: Option<&Object>) -> Outcome {
    let f: CyclotomicSeries = match (input, object) {
        (Some(path), None) => CyclotomicSeries::from_json(&read_json(path)?)?,
        (None, Some(obj)) => obj.series(ctx.order, &ctx.config)?.to_cyclotomic(),
        _ => return Err(usage("give exactly one of --input and --object")),
    };
    let out = mult_hecke(&f, k, level, p)?;
    ctx.emit(output::series(&out, out.to_json(), ctx.format));
    Ok(true)
}

fn borcherds(ctx: &Ctx, delta: i64, r: Option<i64>, d: u32) -> Outcome {
    if !is_admissible(d as i64) {
        return Err(usage(format!("d = {d} must be 0 or 3 mod 4")));
    }
    if let Some(r) = r {
        if (r * r - delta).rem_euclid(4) != 0 {
            return Err(usage(format!("r = {r} does not satisfy r^2 = Delta mod 4")));
        }
    }
    // Exponents c(Delta n^2) for n <= order + 1 cover the expansion below q^order
    // (the Weyl vector is at most 1/12).
    let e = ctx.order.max(1) + 2;
    let basis = build_basis(d, delta * e * e + 1)?;
    let data = BorcherdsProductData::from_basis(&basis, d, delta)?;
    let psi = expand_psi(&data, ctx.order)?;
    ctx.emit(output::series(&psi, psi.to_json(), ctx.format));
    Ok(true)
}

fn trace(ctx: &Ctx, delta: i64, d: i64, level: Option<i64>, plus: bool, f: &Object) -> Outcome {
    let n = f.level();
    if let Some(l) = level {
        if l != n {
            return Err(usage(format!("{f:?} lives on level {n}, not {l}")));
        }
    }
    let base = if plus { TraceOptions::plus() } else { TraceOptions::default() };
    let opts = TraceOptions { prec: ctx.prec, ..base };
    let run = |g: &dyn ModularFunction| twisted_trace(g, delta, d, n, &opts);
    let (value, residual, classes) = match f {
        Object::J | Object::FaberJ(_) => {
            let k = if let Object::FaberJ(k) = f { *k } else { 1 };
            let t = run(&FaberJ(k))?;
            let mut v = t.value_over_sqrt_delta;
            if *f == Object::J {
                v += class_number(delta, d, 1, &opts)? * num_rational::BigRational::from_integer(744.into());
            }
            (v, t.residual, t.classes)
        }
        Object::Haupt(_) | Object::Plus(..) | Object::Minus(..) | Object::Sharp(..) => {
            let m = match f {
                Object::Plus(_, m) | Object::Minus(_, m) | Object::Sharp(_, m) => *m,
                _ => 1,
            };
            let t = with_level(&ctx.config, n, 1000, m, |lvl| match f {
                Object::Minus(_, m) => run(&lvl.minus_function(*m)?),
                Object::Sharp(_, m) => run(lvl.sharp_function(*m)?.as_ref()),
                _ => run(lvl.plus_function(m)?.as_ref()),
            })?;
            (t.value_over_sqrt_delta, t.residual, t.classes)
        }
        _ => return Err(usage(format!("{f:?} is not a modular function with a trace"))),
    };
    ctx.emit(output::record(
        &[
            ("N", json!(n)),
            ("delta", json!(delta)),
            ("d", json!(d)),
            ("plus", json!(plus)),
            ("value_over_sqrt_delta", output::rational(&value)),
            ("residual", json!(format!("{residual:.3e}"))),
            ("classes", json!(classes)),
            ("prec", json!(ctx.prec)),
        ],
        ctx.format,
    ));
    Ok(true)
}

fn class_number_verb(ctx: &Ctx, delta: i64, d: i64, level: i64, plus: bool) -> Outcome {
    let opts = if plus { TraceOptions::plus() } else { TraceOptions::default() };
    let value = class_number(delta, d, level, &opts)?;
    let classes = trace_terms(delta, d, level, &opts)?.len();
    ctx.emit(output::record(
        &[
            ("N", json!(level)),
            ("delta", json!(delta)),
            ("d", json!(d)),
            ("plus", json!(plus)),
            ("value", output::rational(&value)),
            ("classes", json!(classes)),
        ],
        ctx.format,
    ));
    Ok(true)
}

fn run(cli: Cli) -> Outcome {
    let config = match &cli.config {
        Some(path) => Genus1Config::load(path)?,
        None => Genus1Config::default(),
    };
    if cli.order < 0 {
        return Err(usage("--order must be non-negative"));
    }
    let ctx = Ctx { order: cli.order, prec: cli.prec, format: cli.format, timings: cli.timings, config };
    match &cli.command {
        Command::Expand { object } => expand(&ctx, object),
        Command::Hecke { k, p, m, input, object } => hecke(&ctx, *k, *p, *m, input.as_ref(), object.as_ref()),
        Command::MultHecke { k, level, p, input, object } => {
            mult_hecke_verb(&ctx, *k, *level, *p, input.as_ref(), object.as_ref())
        }
        Command::Borcherds { delta, r, d } => borcherds(&ctx, *delta, *r, *d),
        Command::Trace { delta, d, level, plus, f } => trace(&ctx, *delta, *d, *level, *plus, f),
        Command::ClassNumber { delta, d, level, plus } => class_number_verb(&ctx, *delta, *d, *level, *plus),
        Command::Verify(args) => verify::verify(&ctx, args),
        Command::Table(args) => verify::table(&ctx, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

//! The `verify` and `table` verbs.

use clap::{Args, ValueEnum};
use heckelift::acceptance::{run_all, Resources, Scale, LEVEL_MMAX};
use heckelift::borcherds::{faber_duality, verify_log_derivative, verify_thm31, verify_thm32, BorcherdsProductData};
use heckelift::genus1::{
    admissible_pairs, verify_cor45, verify_cor46, verify_div3, verify_hep, verify_r1, verify_r2, verify_thm44,
    verify_thm44_class_numbers, GENUS_ONE_LEVELS,
};
use heckelift::heegner::{class_number, trace_terms, twisted_trace, FaberJ, PlusStabilizer, TraceOptions};
use heckelift::zagier::{build_basis, is_admissible, require_prime, verify_cor42, verify_thm41, LayeredTables, TraceSource};
use heckelift::VerificationReport;
use serde_json::json;

use crate::objects::{with_level, MIN_LEVEL_TRUNC};
use crate::output::{self, Format};
use crate::{usage, Ctx, Failure, Outcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Thm31,
    Thm32,
    Df,
    LogDerivative,
    Thm41,
    Cor42,
    Thm44,
    Cor45,
    Cor46,
    Hep,
    Div3,
    R1,
    R2,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Source {
    /// Coefficients of the weight-1/2 basis.
    Table,
    /// Numerical traces at CM points.
    Cm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Stabilizer {
    Extended,
    Plain,
}

#[derive(Args)]
pub struct VerifyArgs {
    check: Check,
    #[arg(long)]
    delta: Option<i64>,
    #[arg(long)]
    d: Option<i64>,
    #[arg(long)]
    p: Option<u32>,
    #[arg(long, default_value_t = 1)]
    m: u32,
    #[arg(long = "N")]
    level: Option<i64>,
    #[arg(long, default_value_t = 6)]
    nmax: i64,
    /// Trace source for thm41.
    #[arg(long, value_enum, default_value_t = Source::Table)]
    source: Source,
    /// Plus-trace weighting of Fricke-fixed classes, for r2.
    #[arg(long, value_enum, default_value_t = Stabilizer::Extended)]
    stabilizer: Stabilizer,
    /// For `all`: the acceptance grid only.
    #[arg(long)]
    quick: bool,
}

fn req<T: Copy>(v: Option<T>, name: &str, check: Check) -> Result<T, Failure> {
    v.ok_or_else(|| usage(format!("{check:?} needs --{name}").to_lowercase()))
}

fn emit_reports(ctx: &Ctx, reports: &[VerificationReport]) -> bool {
    if ctx.format == Format::Csv {
        ctx.emit(output::REPORT_CSV_HEADER.to_string());
    }
    for r in reports {
        ctx.emit(output::report(r, ctx.format, ctx.timings));
    }
    reports.iter().all(|r| r.pass)
}

/// Product data for `f_d` twisted by `Delta`, with enough exponents for
/// the Hecke checks at `p` (if any) below `q^trunc`.
fn product_data(delta: i64, d: i64, p: Option<u32>, trunc: i64) -> Result<BorcherdsProductData, Failure> {
    if d < 0 || !is_admissible(d) {
        return Err(usage(format!("d = {d} must be 0 or 3 mod 4")));
    }
    if let Some(p) = p {
        check_prime(p, delta)?;
    }
    // Weyl vectors here are at most 1/12, so one extra term covers the shift.
    let e = p.unwrap_or(1) as i64 * (trunc + 2) + 1;
    let basis = build_basis(d as u32, delta * e * e + 1)?;
    Ok(BorcherdsProductData::from_basis(&basis, d as u32, delta)?)
}

/// Rejects bad primes before any (possibly large) basis build.
fn check_prime(p: u32, delta: i64) -> Result<(), Failure> {
    require_prime(p)?;
    if delta % p as i64 == 0 {
        return Err(usage(format!("p = {p} divides Delta = {delta}")));
    }
    Ok(())
}

fn verify_all(ctx: &Ctx, quick: bool) -> Outcome {
    let res = Resources::new(ctx.config.clone());
    res.prepare()?;
    let outcomes = run_all(&res, if quick { Scale::Quick } else { Scale::Full });
    for o in &outcomes {
        match ctx.format {
            Format::Text => ctx.emit(o.line()),
            Format::Json => {
                let reports: Vec<_> = o.reports.iter().map(|r| output::report_json(r, ctx.timings)).collect();
                let mut v = json!({ "criterion": o.id, "title": o.title, "pass": o.pass(), "reports": reports });
                if ctx.timings {
                    v["runtime_ms"] = json!(o.runtime_ms);
                }
                ctx.emit(v.to_string());
            }
            Format::Csv => {
                if o.id == 1 {
                    ctx.emit("criterion,title,pass,reports,failing".into());
                }
                let failing: Vec<&str> = o.failing().map(|r| r.check.as_str()).collect();
                ctx.emit(format!("{},{},{},{},{}", o.id, output::csv_field(o.title), o.pass(), o.reports.len(), output::csv_field(&failing.join(" "))));
            }
        }
    }
    Ok(outcomes.iter().all(|o| o.pass()))
}

pub fn verify(ctx: &Ctx, a: &VerifyArgs) -> Outcome {
    let c = a.check;
    let reports = match c {
        Check::All => return verify_all(ctx, a.quick),
        Check::Df => vec![faber_duality(ctx.order)?],
        Check::Thm31 | Check::Thm32 | Check::LogDerivative => {
            let delta = a.delta.unwrap_or(1);
            let d = a.d.unwrap_or(0);
            if c == Check::LogDerivative {
                let data = product_data(delta, d, None, ctx.order)?;
                vec![verify_log_derivative(&data, ctx.order)?]
            } else {
                let p = req(a.p, "p", c)?;
                let data = product_data(delta, d, Some(p), ctx.order)?;
                let check = if c == Check::Thm31 { verify_thm31 } else { verify_thm32 };
                vec![check(&data, p, ctx.order)?]
            }
        }
        Check::Thm41 | Check::Cor42 => {
            let (delta, d, p) = (req(a.delta, "delta", c)?, req(a.d, "d", c)?, req(a.p, "p", c)?);
            if d <= 0 || !is_admissible(d) || a.nmax < 1 {
                return Err(usage("need d > 0 with d = 0, 3 mod 4 and nmax >= 1"));
            }
            check_prime(p, delta)?;
            let pm = (p as i64).checked_pow(a.m).ok_or_else(|| usage("p^m too large"))?;
            if c == Check::Thm41 && a.source == Source::Cm {
                vec![verify_thm41(&TraceSource::Cm { prec: ctx.prec }, delta, d, p, a.m, a.nmax)?]
            } else {
                // Small d to large index, and large d to small index.
                let tall = build_basis(d as u32, delta * (pm * a.nmax).pow(2) + 1)?;
                let wide = build_basis((pm * pm * d) as u32, delta * a.nmax * a.nmax + 1)?;
                let table = LayeredTables(vec![&tall, &wide]);
                if c == Check::Thm41 {
                    vec![verify_thm41(&TraceSource::Table(&table), delta, d, p, a.m, a.nmax)?]
                } else {
                    vec![verify_cor42(&table, delta, d, p, a.m, a.nmax)?]
                }
            }
        }
        Check::Cor46 => {
            let (n, delta, d, p) = (req(a.level, "N", c)?, req(a.delta, "delta", c)?, req(a.d, "d", c)?, req(a.p, "p", c)?);
            vec![verify_cor46(n, delta, d, p)?]
        }
        Check::Thm44 | Check::Cor45 | Check::Hep | Check::Div3 => {
            let (n, delta, d, p) = (req(a.level, "N", c)?, req(a.delta, "delta", c)?, req(a.d, "d", c)?, req(a.p, "p", c)?);
            let nmax = u32::try_from(a.nmax).map_err(|_| usage("nmax must be non-negative"))?;
            with_level(&ctx.config, n, MIN_LEVEL_TRUNC, LEVEL_MMAX, |lvl| {
                Ok(match c {
                    Check::Thm44 => vec![
                        verify_thm44_class_numbers(n, delta, d, p, &TraceOptions::plus())?,
                        verify_thm44(lvl, delta, d, p, nmax)?,
                    ],
                    Check::Cor45 => vec![verify_cor45(lvl, delta, d, p, nmax)?],
                    Check::Hep => vec![verify_hep(lvl, delta, d, p, nmax)?],
                    _ => vec![verify_div3(lvl, delta, d, a.nmax + 1)?],
                })
            })?
        }
        Check::R1 => {
            let n = req(a.level, "N", c)?;
            let m = a.m.max(2);
            with_level(&ctx.config, n, MIN_LEVEL_TRUNC, m, |lvl| Ok(vec![verify_r1(lvl, m)?]))?
        }
        Check::R2 => {
            let (n, delta, d) = (req(a.level, "N", c)?, req(a.delta, "delta", c)?, req(a.d, "d", c)?);
            let stab = match a.stabilizer {
                Stabilizer::Extended => PlusStabilizer::Extended,
                Stabilizer::Plain => PlusStabilizer::Plain,
            };
            let opts = TraceOptions { plus_stabilizer: stab, prec: ctx.prec, ..TraceOptions::plus() };
            with_level(&ctx.config, n, MIN_LEVEL_TRUNC, a.m.max(2), |lvl| Ok(vec![verify_r2(lvl, a.m, delta, d, &opts)?]))?
        }
    };
    Ok(emit_reports(ctx, &reports))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableKind {
    /// One row per (N, p, Delta, d) for the congruence mod p.
    Cor45,
    /// One row per (N, p, Delta, d) for the congruence of class numbers.
    Cor46,
    /// Level-one traces of J_n for admissible d <= dmax.
    Traces,
    /// Twisted class numbers for admissible d <= dmax.
    ClassNumbers,
}

#[derive(Args)]
pub struct TableArgs {
    kind: TableKind,
    /// Genus-one level; all three when omitted (level 1 for class numbers).
    #[arg(long = "N")]
    level: Option<i64>,
    /// Primes; 2 and 3 when omitted.
    #[arg(long, value_delimiter = ',')]
    p: Vec<u32>,
    /// Admissible pairs per level and prime.
    #[arg(long, default_value_t = 3)]
    count: usize,
    #[arg(long)]
    delta: Option<i64>,
    #[arg(long, default_value_t = 20)]
    dmax: i64,
    #[arg(long, default_value_t = 5)]
    nmax: u32,
    #[arg(long)]
    plus: bool,
}

fn row(fields: &[String]) -> String {
    fields.iter().map(|f| output::csv_field(f)).collect::<Vec<_>>().join(",")
}

/// CSV regardless of `--format`; rows come in parameter order.
pub fn table(ctx: &Ctx, a: &TableArgs) -> Outcome {
    let primes = if a.p.is_empty() { vec![2, 3] } else { a.p.clone() };
    let mut all_pass = true;
    match a.kind {
        TableKind::Cor45 | TableKind::Cor46 => {
            let levels: Vec<i64> = a.level.map_or(GENUS_ONE_LEVELS.to_vec(), |n| vec![n]);
            println!("N,p,delta,d,pass,cases,first_mismatch");
            for n in levels {
                let reports = with_level(&ctx.config, n, MIN_LEVEL_TRUNC, LEVEL_MMAX, |lvl| {
                    let mut out = Vec::new();
                    for &p in &primes {
                        for (delta, d) in admissible_pairs(n, p, a.count) {
                            let r = if a.kind == TableKind::Cor45 {
                                verify_cor45(lvl, delta, d, p, a.nmax)?
                            } else {
                                verify_cor46(n, delta, d, p)?
                            };
                            out.push((p, delta, d, r));
                        }
                    }
                    Ok(out)
                })?;
                for (p, delta, d, r) in reports {
                    all_pass &= r.pass;
                    let mismatch = r.first_mismatch.as_ref().map(|m| m.to_string()).unwrap_or_default();
                    println!("{}", row(&[n.to_string(), p.to_string(), delta.to_string(), d.to_string(), r.pass.to_string(), r.cases.to_string(), mismatch]));
                }
            }
        }
        TableKind::Traces => {
            let delta = a.delta.ok_or_else(|| usage("traces needs --delta"))?;
            let opts = TraceOptions { prec: ctx.prec, ..TraceOptions::default() };
            println!("delta,d,n,value_over_sqrt_delta,residual");
            for d in (1..=a.dmax).filter(|&d| is_admissible(d)) {
                for n in 1..=a.nmax {
                    let t = twisted_trace(&FaberJ(n), delta, d, 1, &opts)?;
                    println!("{}", row(&[delta.to_string(), d.to_string(), n.to_string(), t.value_over_sqrt_delta.to_string(), format!("{:.3e}", t.residual)]));
                }
            }
        }
        TableKind::ClassNumbers => {
            let delta = a.delta.ok_or_else(|| usage("class-numbers needs --delta"))?;
            let n = a.level.unwrap_or(1);
            let opts = if a.plus { TraceOptions::plus() } else { TraceOptions::default() };
            println!("N,delta,d,plus,value,classes");
            for d in (1..=a.dmax).filter(|&d| is_admissible(d)) {
                let terms = match trace_terms(delta, d, n, &opts) {
                    Ok(t) => t,
                    // d not admissible at this level: skip the row.
                    Err(heckelift::Error::InvalidArgument(_)) => continue,
                    Err(e) => return Err(e.into()),
                };
                let value = class_number(delta, d, n, &opts)?;
                println!("{}", row(&[n.to_string(), delta.to_string(), d.to_string(), a.plus.to_string(), value.to_string(), terms.len().to_string()]));
            }
        }
    }
    Ok(all_pass)
}

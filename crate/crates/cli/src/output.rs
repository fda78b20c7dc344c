//! Rendering in the three output formats.  JSON output is one compact object
//! per line with sorted keys, so identical runs give identical bytes.

use std::fmt::Display;

use clap::ValueEnum;
use heckelift::{Coeff, QSeries, VerificationReport};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
    Csv,
}

pub fn series<C: Coeff + Display>(s: &QSeries<C>, json: Value, format: Format) -> String {
    match format {
        Format::Json => json.to_string(),
        Format::Text => s.to_string(),
        Format::Csv => {
            let mut out = String::from("exponent,coefficient");
            for (e, c) in s.terms() {
                out.push_str(&format!("\n{e},{}", csv_field(&c.to_string())));
            }
            out
        }
    }
}

/// An exact rational as a JSON number when it is an integer that fits in
/// 64 bits, otherwise as a string.
pub fn rational(r: &BigRational) -> Value {
    match r.is_integer().then(|| r.to_integer().to_i64()).flatten() {
        Some(v) => json!(v),
        None => json!(r.to_string()),
    }
}

/// The report as JSON; `runtime_ms` only with `timings`, since it would make
/// the output differ between identical runs.
pub fn report_json(r: &VerificationReport, timings: bool) -> Value {
    let mut v = r.to_json();
    if !timings {
        if let Some(o) = v.as_object_mut() {
            o.remove("runtime_ms");
        }
    }
    v
}

pub fn report(r: &VerificationReport, format: Format, timings: bool) -> String {
    match format {
        Format::Json => report_json(r, timings).to_string(),
        Format::Text => {
            let verdict = if r.pass { "PASS" } else { "FAIL" };
            let mut s = format!("{} {}: {verdict} ({} cases)", r.check, r.params, r.cases);
            if let Some(m) = &r.first_mismatch {
                s.push_str(&format!(", first mismatch {m}"));
            }
            if let Some(n) = &r.note {
                s.push_str(&format!("; {n}"));
            }
            if timings {
                s.push_str(&format!(" [{} ms]", r.runtime_ms));
            }
            s
        }
        Format::Csv => {
            let mismatch = r.first_mismatch.as_ref().map(|m| m.to_string()).unwrap_or_default();
            format!("{},{},{},{},{}", r.check, csv_field(&r.params.to_string()), r.pass, r.cases, csv_field(&mismatch))
        }
    }
}

pub const REPORT_CSV_HEADER: &str = "check,params,pass,cases,first_mismatch";

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// A flat record (`key = value` in text, one JSON object otherwise).
pub fn record(fields: &[(&str, Value)], format: Format) -> String {
    match format {
        Format::Json => {
            let map: serde_json::Map<String, Value> = fields.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
            Value::Object(map).to_string()
        }
        Format::Text => fields.iter().map(|(k, v)| format!("{k} = {}", plain(v))).collect::<Vec<_>>().join("\n"),
        Format::Csv => {
            let head: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
            let row: Vec<String> = fields.iter().map(|(_, v)| csv_field(&plain(v))).collect();
            format!("{}\n{}", head.join(","), row.join(","))
        }
    }
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

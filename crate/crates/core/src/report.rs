//! Pass/fail records produced by the verifiers.

use serde::Serialize;
use serde_json::{json, Value};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub params: Value,
    pub pass: bool,
    /// The first exponent or index at which the two sides differ.
    pub first_mismatch: Option<Value>,
    /// Number of individual comparisons made.
    pub cases: usize,
    /// Numerical residuals behind the verdict, when it rests on recognition.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub residuals: Vec<f64>,
    pub runtime_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl VerificationReport {
    pub fn new(check: &str, params: Value) -> Self {
        VerificationReport { check: check.to_string(), params, pass: true, first_mismatch: None, cases: 0, residuals: Vec::new(), runtime_ms: 0, note: None }
    }

    /// Records one comparison at `at`.
    pub fn record(&mut self, ok: bool, at: impl Into<Value>) {
        self.cases += 1;
        if !ok && self.pass {
            self.pass = false;
            self.first_mismatch = Some(at.into());
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Records a residual that must stay below `tol`.
    pub fn residual(&mut self, value: f64, tol: f64) {
        self.residuals.push(value);
        self.record(value < tol, serde_json::json!({ "residual": value, "tol": tol }));
    }

    /// Runs `f` and stores its wall time in `runtime_ms`.
    pub fn timed(f: impl FnOnce() -> crate::error::Result<Self>) -> crate::error::Result<Self> {
        let start = std::time::Instant::now();
        let mut r = f()?;
        r.runtime_ms = start.elapsed().as_millis() as u64;
        Ok(r)
    }

    /// Folds another report into this one.
    pub fn absorb(&mut self, other: &VerificationReport) {
        self.cases += other.cases;
        self.residuals.extend_from_slice(&other.residuals);
        if !other.pass && self.pass {
            self.pass = false;
            self.first_mismatch = Some(json!({ "check": other.check, "params": other.params, "at": other.first_mismatch }));
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_mismatch_sticks() {
        let mut r = VerificationReport::new("demo", json!({"p": 2}));
        r.record(true, 0);
        r.record(false, 3);
        r.record(false, 5);
        assert!(!r.pass);
        assert_eq!(r.first_mismatch, Some(json!(3)));
        assert_eq!(r.cases, 3);
        assert_eq!(r.to_json()["check"], "demo");
    }
}

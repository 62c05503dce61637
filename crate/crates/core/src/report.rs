//! Run reports: a flat list of named checks plus free-form data.
//!
//! Check fields are written with 17 significant digits so that reports from
//! the same seed diff cleanly. Non-finite numbers are written as `null`.

use serde::ser::Serializer;
use serde::Serialize;
use serde_json::value::RawValue;
use serde_json::{Map, Value};

fn sig17<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        let raw = RawValue::from_string(format!("{x:.16e}")).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    } else {
        s.serialize_none()
    }
}

/// How a measured value is compared with its expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|measured - expected| <= tol`.
    Within,
    /// `measured > expected`.
    Above,
    /// `measured < expected`.
    Below,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    #[serde(serialize_with = "sig17")]
    pub measured: f64,
    #[serde(serialize_with = "sig17")]
    pub expected: f64,
    #[serde(serialize_with = "sig17")]
    pub tol: f64,
    pub comparison: Comparison,
    /// Where the expected value comes from: a closed form or an independent
    /// numerical oracle.
    pub provenance: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn within(name: impl Into<String>, measured: f64, expected: f64, tol: f64, provenance: &str) -> Self {
        let pass = (measured - expected).abs() <= tol;
        Self::make(name, measured, expected, tol, Comparison::Within, provenance, pass)
    }

    pub fn above(name: impl Into<String>, measured: f64, bound: f64, provenance: &str) -> Self {
        let pass = measured > bound;
        Self::make(name, measured, bound, 0.0, Comparison::Above, provenance, pass)
    }

    pub fn below(name: impl Into<String>, measured: f64, bound: f64, provenance: &str) -> Self {
        let pass = measured < bound;
        Self::make(name, measured, bound, 0.0, Comparison::Below, provenance, pass)
    }

    /// Exact equality of counts.
    pub fn count(name: impl Into<String>, measured: usize, expected: usize, provenance: &str) -> Self {
        Self::within(name, measured as f64, expected as f64, 0.0, provenance)
    }

    /// A boolean condition, recorded as `1` (true) against `1`.
    pub fn holds(name: impl Into<String>, ok: bool, provenance: &str) -> Self {
        Self::within(name, if ok { 1.0 } else { 0.0 }, 1.0, 0.0, provenance)
    }

    /// A check that could not be evaluated.
    pub fn failed(name: impl Into<String>, provenance: &str, why: impl Into<String>) -> Self {
        Self::make(name, f64::NAN, f64::NAN, 0.0, Comparison::Within, provenance, false).with_note(why)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    fn make(
        name: impl Into<String>,
        measured: f64,
        expected: f64,
        tol: f64,
        comparison: Comparison,
        provenance: &str,
        pass: bool,
    ) -> Self {
        Check {
            name: name.into(),
            measured,
            expected,
            tol,
            comparison,
            provenance: provenance.to_string(),
            pass: pass && !measured.is_nan(),
            note: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub parameters: Map<String, Value>,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub pass: bool,
    /// Supporting data (spectra, per-direction counts, logs).
    pub data: Map<String, Value>,
    #[serde(serialize_with = "sig17")]
    pub wall_time: f64,
}

impl RunReport {
    pub fn new(command: impl Into<String>, seed: u64) -> Self {
        RunReport {
            command: command.into(),
            parameters: Map::new(),
            seed,
            checks: Vec::new(),
            pass: true,
            data: Map::new(),
            wall_time: 0.0,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn datum(&mut self, key: &str, value: impl Serialize) {
        self.data.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn push(&mut self, check: Check) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = Check>) {
        for c in checks {
            self.push(c);
        }
    }

    /// Fold another report's checks in, prefixing names with its command.
    pub fn absorb(&mut self, other: RunReport) {
        for mut c in other.checks {
            c.name = format!("{}/{}", other.command, c.name);
            self.push(c);
        }
        let mut key = other.command.clone();
        let mut k = 1;
        while self.data.contains_key(&key) {
            k += 1;
            key = format!("{}#{k}", other.command);
        }
        self.data.insert(key, Value::Object(other.data));
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_have_seventeen_digits() {
        let c = Check::within("x", 0.1, 0.1, 1e-12, "closed-form:test");
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"measured\":1.0000000000000001e-1"), "{s}");
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["measured"].as_f64(), Some(0.1));
    }

    #[test]
    fn non_finite_is_null_and_fails() {
        let c = Check::within("x", f64::NAN, 1.0, 1.0, "p");
        assert!(!c.pass);
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"measured\":null"));
        assert!(serde_json::to_string(&Check::above("y", f64::INFINITY, 0.0, "p")).unwrap().contains("null"));
    }

    #[test]
    fn report_aggregates() {
        let mut r = RunReport::new("all", 7);
        let mut sub = RunReport::new("clifford", 7);
        sub.push(Check::count("n", 3, 3, "p"));
        sub.push(Check::below("err", 2.0, 1.0, "p"));
        r.absorb(sub);
        assert!(!r.pass);
        assert_eq!(r.failures().count(), 1);
        assert_eq!(r.checks[1].name, "clifford/err");
    }
}

use std::collections::BTreeMap;
use std::time::Duration;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    AtMost,
    AtLeast,
}

/// One named inequality inside a composite certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub sense: Sense,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, sense: Sense::AtMost, passed: value <= limit }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, sense: Sense::AtLeast, passed: value >= limit }
    }
}

/// A measured quantity against a bound; `passed ⇔ measured ≤ bound·(1 + tolerance)`.
///
/// Composite certificates measure the number of failed checks against a
/// bound of zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub name: String,
    pub digest: Option<String>,
    pub measured: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub quantities: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub runtime: Duration,
}

impl Certificate {
    pub fn bounded(name: &str, measured: f64, bound: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            digest: None,
            measured,
            bound,
            tolerance,
            passed: measured <= bound * (1.0 + tolerance),
            quantities: BTreeMap::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            runtime: Duration::ZERO,
        }
    }

    pub fn from_checks(name: &str, checks: Vec<Check>) -> Self {
        let failed = checks.iter().filter(|c| !c.passed).count() as f64;
        let mut c = Self::bounded(name, failed, 0.0, 0.0);
        c.checks = checks;
        c
    }

    pub fn with_quantity(mut self, key: &str, value: f64) -> Self {
        self.quantities.insert(key.into(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn with_digest(mut self, digest: &str) -> Self {
        self.digest = Some(digest.into());
        self
    }

    pub fn with_runtime(mut self, runtime: Duration) -> Self {
        self.runtime = runtime;
        self
    }

    /// One-line human summary.
    pub fn line(&self) -> String {
        format!(
            "{} {}: measured {:.4e} vs bound {:.4e} (tol {})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.bound,
            self.tolerance
        )
    }
}

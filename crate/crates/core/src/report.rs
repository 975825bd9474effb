//! Pass/fail reports shared by every verification routine.

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One named property checked over a batch of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub samples: usize,
    /// Largest observed excess over the allowed tolerance (<= 0 when passing).
    pub worst_excess: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_counterexample: Option<Value>,
}

impl Check {
    pub fn new(name: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass: true,
            samples: 0,
            worst_excess: f64::NEG_INFINITY,
            first_counterexample: None,
        }
    }

    /// Record one sample. `excess` is how far the sample overshoots its
    /// bound; a sample passes iff `excess <= 0`.
    pub fn observe(&mut self, excess: f64, context: impl FnOnce() -> Value) {
        self.samples += 1;
        let bad = excess > 0.0 || excess.is_nan();
        if excess > self.worst_excess || excess.is_nan() {
            self.worst_excess = excess;
        }
        if bad && self.pass {
            self.pass = false;
            self.first_counterexample = Some(context());
        }
    }

    /// Record a boolean outcome.
    pub fn observe_bool(&mut self, ok: bool, context: impl FnOnce() -> Value) {
        self.observe(if ok { 0.0 } else { 1.0 }, context);
    }

    fn finite_worst(&self) -> f64 {
        if self.worst_excess.is_finite() {
            self.worst_excess
        } else {
            0.0
        }
    }
}

/// Report with the common `{pass, samples, seed, first_counterexample}`
/// shape, optionally broken down into named checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub pass: bool,
    pub samples: usize,
    pub seed: u64,
    pub first_counterexample: Option<Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
}

impl Report {
    pub fn from_checks(seed: u64, checks: Vec<Check>) -> Self {
        let mut checks = checks;
        for c in &mut checks {
            c.worst_excess = c.finite_worst();
        }
        let pass = checks.iter().all(|c| c.pass);
        let samples = checks.iter().map(|c| c.samples).max().unwrap_or(0);
        let first_counterexample = checks.iter().find(|c| !c.pass).and_then(|c| {
            c.first_counterexample
                .clone()
                .map(|v| serde_json::json!({ "check": c.name, "sample": v }))
        });
        Report {
            pass,
            samples,
            seed,
            first_counterexample,
            checks,
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Name of the first failing check, if any.
    pub fn first_failure(&self) -> Option<&str> {
        self.checks.iter().find(|c| !c.pass).map(|c| c.name.as_str())
    }
}

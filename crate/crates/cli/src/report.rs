use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::config::CampaignConfig;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub toolkit_version: &'static str,
    pub command: String,
    pub config: CampaignConfig,
    pub tasks: Vec<TaskResult>,
    /// Filled by `reproduce-paper` only.
    pub acceptance: Vec<CriterionResult>,
}

impl Report {
    pub fn new(command: &str, config: CampaignConfig) -> Self {
        Report {
            toolkit_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config,
            tasks: Vec::new(),
            acceptance: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(dir.join("report.json"), text + "\n")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskResult {
    pub name: String,
    pub seconds: f64,
    pub ok: bool,
    pub result: Value,
    pub error: Option<String>,
}

impl TaskResult {
    /// Runs `f`, timing it and capturing its error text.
    pub fn run<E: std::fmt::Display>(name: &str, f: impl FnOnce() -> Result<Value, E>) -> Self {
        let t = Instant::now();
        let out = f();
        let seconds = t.elapsed().as_secs_f64();
        match out {
            Ok(result) => TaskResult {
                name: name.to_string(),
                seconds,
                ok: true,
                result,
                error: None,
            },
            Err(e) => TaskResult {
                name: name.to_string(),
                seconds,
                ok: false,
                result: Value::Null,
                error: Some(e.to_string()),
            },
        }
    }
}

/// A check that did not hold: what was measured, where, and what was wanted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub quantity: String,
    pub location: String,
    pub value: Option<f64>,
    pub expected: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub title: String,
    pub pass: bool,
    pub checks: usize,
    pub failures: Vec<Failure>,
    /// Measured values worth reading even when everything passed.
    pub notes: Vec<String>,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        let mut s = format!("{status} criterion {:>2}: {} ({} checks", self.id, self.title, self.checks);
        if !self.failures.is_empty() {
            s.push_str(&format!(", {} failed", self.failures.len()));
        }
        s.push(')');
        for f in self.failures.iter().take(5) {
            s.push_str(&format!("\n    {} at {}: {:?}, expected {}", f.quantity, f.location, f.value, f.expected));
        }
        s
    }
}

/// Accumulates checks for one criterion.
#[derive(Debug, Default)]
pub struct Checks {
    pub count: usize,
    pub failures: Vec<Failure>,
    pub notes: Vec<String>,
}

impl Checks {
    pub fn check(&mut self, ok: bool, quantity: &str, location: &str, value: Option<f64>, expected: impl Into<String>) {
        self.count += 1;
        if !ok {
            self.failures.push(Failure {
                quantity: quantity.to_string(),
                location: location.to_string(),
                value,
                expected: expected.into(),
            });
        }
    }

    /// `|value - target| <= tol`.
    pub fn near(&mut self, quantity: &str, location: &str, value: f64, target: f64, tol: f64) {
        self.check((value - target).abs() <= tol, quantity, location, Some(value), format!("{target} ± {tol:e}"));
    }

    /// `value <= bound`.
    pub fn at_most(&mut self, quantity: &str, location: &str, value: f64, bound: f64) {
        self.check(value <= bound, quantity, location, Some(value), format!("<= {bound:e}"));
    }

    /// A computation that had to succeed.
    pub fn fail(&mut self, quantity: &str, location: &str, error: impl std::fmt::Display) {
        self.check(false, quantity, location, None, format!("a result, got error: {error}"));
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn finish(self, id: usize, title: &str, seconds: f64) -> CriterionResult {
        CriterionResult {
            id,
            title: title.to_string(),
            pass: self.failures.is_empty() && self.count > 0,
            checks: self.count,
            failures: self.failures,
            notes: self.notes,
            seconds,
        }
    }
}

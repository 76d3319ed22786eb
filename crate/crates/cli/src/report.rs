//! Pass/fail checks, the run manifest and the plain-text summary.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;
use serde::Serialize;

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub requirement: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            requirement: format!("<= {limit:e}"),
            passed: measured <= limit,
        }
    }

    pub fn below(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            requirement: format!("< {limit:e}"),
            passed: measured < limit,
        }
    }

    /// Boolean property, recorded with `measured` 1 for true and 0 for false.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            measured: if ok { 1.0 } else { 0.0 },
            requirement: "holds".into(),
            passed: ok,
        }
    }
}

/// What a workflow produced, before timing and bookkeeping are attached.
#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub files: Vec<String>,
    pub notes: Vec<String>,
}

impl Outcome {
    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn file(&mut self, s: impl Into<String>) {
        self.files.push(s.into());
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    timings: Timings,
    passed: bool,
    checks: &'a [Check],
    notes: &'a [String],
    files: &'a [String],
}

#[derive(Serialize)]
struct Timings {
    total_seconds: f64,
}

pub fn write_manifest(dir: &Path, config: &ExperimentConfig, outcome: &Outcome, seconds: f64) -> Result<()> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config,
        timings: Timings { total_seconds: seconds },
        passed: outcome.passed(),
        checks: &outcome.checks,
        notes: &outcome.notes,
        files: &outcome.files,
    };
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

pub fn summary_text(outcome: &Outcome) -> String {
    let mut out = String::new();
    for c in &outcome.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "[{verdict}] {}: {:.6e} (required {})", c.name, c.measured, c.requirement);
    }
    for n in &outcome.notes {
        let _ = writeln!(out, "note: {n}");
    }
    let failed = outcome.failures().count();
    let _ = writeln!(
        out,
        "{} of {} checks passed",
        outcome.checks.len() - failed,
        outcome.checks.len()
    );
    out
}

pub fn write_summary(dir: &Path, outcome: &Outcome) -> Result<()> {
    std::fs::write(dir.join("summary.txt"), summary_text(outcome))?;
    Ok(())
}

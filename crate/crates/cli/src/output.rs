//! Output directory bookkeeping: files, checks and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::failure::{Failure, Reason};

/// Number formatting shared by every CSV: shortest round-trip form, with an
/// exponent outside `[1e-4, 1e6)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e6).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// A number tied to a bound, with its verdict.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    /// `le` when the check is `value ≤ bound`, `ge` for `value ≥ bound`.
    pub relation: &'static str,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
struct OutputEntry {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    scenario: &'a str,
    command: &'a str,
    config_sha256: &'a str,
    exit_code: u8,
    status: &'static str,
    reason: Option<Reason>,
    checks_passed: usize,
    checks_failed: usize,
    outputs: Vec<OutputEntry>,
}

pub struct Output {
    dir: PathBuf,
    files: Vec<OutputEntry>,
    checks: Vec<Check>,
}

impl Output {
    pub fn create(dir: PathBuf) -> Result<Self, Failure> {
        fs::create_dir_all(&dir)
            .map_err(|e| Failure::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Output {
            dir,
            files: Vec::new(),
            checks: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        fs::write(self.dir.join(name), bytes)?;
        log::info!("wrote {}", self.dir.join(name).display());
        self.files.push(OutputEntry {
            path: name.to_string(),
            sha256: hex_digest(bytes),
        });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Failure::Solver(format!("csv: {e}"));
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::Solver(format!("csv: {e}")))?;
        self.write(name, &bytes)
    }

    /// Records `value ≤ bound`.
    pub fn check_le(&mut self, name: impl Into<String>, value: f64, bound: f64) -> bool {
        self.push(name.into(), value, bound, "le", value <= bound)
    }

    /// Records `value ≥ bound`.
    pub fn check_ge(&mut self, name: impl Into<String>, value: f64, bound: f64) -> bool {
        self.push(name.into(), value, bound, "ge", value >= bound)
    }

    /// Records a boolean property as `value ∈ {0, 1}` against bound 1.
    pub fn check_flag(&mut self, name: impl Into<String>, holds: bool) -> bool {
        self.push(name.into(), if holds { 1.0 } else { 0.0 }, 1.0, "ge", holds)
    }

    fn push(&mut self, name: String, value: f64, bound: f64, relation: &'static str, passed: bool) -> bool {
        if !passed {
            log::warn!("check {name} failed: {value} vs bound {bound}");
        }
        self.checks.push(Check {
            name,
            value,
            bound,
            relation,
            passed,
        });
        passed
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    /// Writes `checks.csv` (if any check was recorded) and `manifest.json`.
    pub fn finish(mut self, scenario: &str, command: &str, config_sha256: &str, outcome: Option<&Failure>) -> Result<(), Failure> {
        if !self.checks.is_empty() {
            let rows: Vec<Vec<String>> = self
                .checks
                .iter()
                .map(|c| {
                    vec![
                        c.name.clone(),
                        num(c.value),
                        c.relation.to_string(),
                        num(c.bound),
                        c.passed.to_string(),
                    ]
                })
                .collect();
            self.csv("checks.csv", &["check", "value", "relation", "bound", "passed"], &rows)?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        let manifest = Manifest {
            scenario,
            command,
            config_sha256,
            exit_code: outcome.map_or(0, Failure::code),
            status: outcome.map_or("ok", |f| f.reason().kind),
            reason: outcome.map(Failure::reason),
            checks_passed: self.checks.len() - failed,
            checks_failed: failed,
            outputs: std::mem::take(&mut self.files),
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Solver(e.to_string()))?;
        text.push('\n');
        fs::write(self.dir.join("manifest.json"), text)?;
        Ok(())
    }
}

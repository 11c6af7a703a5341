//! CSV tables and the JSON run summary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

pub const SCHEMA_ID: &str = "torus-shape/summary/v1";

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Option<f64>,
    /// Upper bound, or lower bound when `lower_bound` is set.
    pub tolerance: f64,
    pub lower_bound: bool,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct RunInfo {
    pub surface: String,
    pub grid: [usize; 2],
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub schema: &'static str,
    pub command: String,
    pub version: &'static str,
    pub run: RunInfo,
    pub scalars: BTreeMap<String, Option<f64>>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub artifacts: Vec<String>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl Summary {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        Self {
            schema: SCHEMA_ID,
            command: command.into(),
            version: env!("CARGO_PKG_VERSION"),
            run: RunInfo {
                surface: cfg.surface.label(),
                grid: [cfg.grid, cfg.grid],
                seed: cfg.seed,
            },
            scalars: BTreeMap::new(),
            checks: Vec::new(),
            pass: true,
            artifacts: Vec::new(),
        }
    }

    pub fn scalar(&mut self, name: impl Into<String>, v: f64) {
        self.scalars.insert(name.into(), finite(v));
    }

    /// Records `value <= tolerance`.
    pub fn check_max(&mut self, name: impl Into<String>, value: f64, tolerance: f64) {
        self.push(name.into(), value, tolerance, false, value <= tolerance);
    }

    /// Records `value >= bound`.
    pub fn check_min(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.push(name.into(), value, bound, true, value >= bound);
    }

    fn push(&mut self, name: String, value: f64, tolerance: f64, lower_bound: bool, pass: bool) {
        self.checks.push(Check {
            name,
            value: finite(value),
            tolerance,
            lower_bound,
            pass,
        });
        self.pass &= pass;
    }

    pub fn print_table(&self) {
        if self.checks.is_empty() {
            return;
        }
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let rel = if c.lower_bound { ">=" } else { "<=" };
            let value = c.value.map_or("nan".to_string(), |v| format!("{v:.3e}"));
            println!(
                "{:<4} {:<width$}  {value:>10} {rel} {:.1e}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.tolerance
            );
        }
    }

    /// Writes `<command>_summary.json` into `dir`.
    pub fn write(&mut self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(format!("{}_summary.json", self.command.replace('-', "_")));
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Config(e.to_string()))?;
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

/// CSV file with a header row; values are written in shortest round-trip
/// exponent form.
pub struct Table {
    path: PathBuf,
    writer: csv::Writer<std::fs::File>,
}

impl Table {
    pub fn create(dir: &Path, name: &str, header: &[&str], summary: &mut Summary) -> Result<Self, CliError> {
        let path = dir.join(name);
        let mut writer = csv::Writer::from_path(&path)?;
        writer.write_record(header)?;
        summary.artifacts.push(name.to_string());
        Ok(Self { path, writer })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<(), CliError> {
        self.writer.write_record(values.iter().map(|v| format!("{v:e}")))?;
        Ok(())
    }

    pub fn text_row(&mut self, values: &[String]) -> Result<(), CliError> {
        self.writer.write_record(values)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.writer.flush()?;
        Ok(self.path)
    }
}

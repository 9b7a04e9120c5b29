//! Reports, check records and their JSON/CSV forms.

use std::io::Write;

use probframe::McEstimate;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

pub const SCHEMA: u32 = 1;
pub const CSV_HEADER: &str = "name,value,target,std_error,z_score,pass";

/// One verified quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub std_error: Option<f64>,
    pub z_score: Option<f64>,
    pub pass: bool,
}

impl Record {
    /// `|value − target| ≤ tol`.
    pub fn close(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        let pass = (value - target).abs() <= tol;
        Self { name: name.into(), value, target, std_error: None, z_score: None, pass }
    }

    /// `value ≤ bound`; the bound is reported as the target.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, target: bound, std_error: None, z_score: None, pass: value <= bound }
    }

    /// `value ≥ bound`; the bound is reported as the target.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, target: bound, std_error: None, z_score: None, pass: value >= bound }
    }

    pub fn estimate(name: impl Into<String>, est: &McEstimate, z_max: f64) -> Self {
        Self {
            name: name.into(),
            value: est.value,
            target: est.target,
            std_error: Some(est.std_error),
            z_score: est.z_score,
            pass: est.passes(z_max),
        }
    }

    /// Two estimates of the same quantity compared by their z-difference.
    pub fn difference(name: impl Into<String>, a: f64, b: f64, std_error: f64, z: f64, z_max: f64) -> Self {
        Self {
            name: name.into(),
            value: a,
            target: b,
            std_error: Some(std_error),
            z_score: Some(z),
            pass: z.abs() <= z_max,
        }
    }

    pub fn prefixed(mut self, prefix: &str) -> Self {
        self.name = format!("{prefix}.{}", self.name);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub config: ExperimentConfig,
    pub records: Vec<Record>,
    pub payload: serde_json::Value,
    pub pass: bool,
    pub duration_seconds: f64,
}

impl Report {
    pub fn new(config: ExperimentConfig, records: Vec<Record>, payload: serde_json::Value, duration_seconds: f64) -> Self {
        let pass = records.iter().all(|r| r.pass);
        Self { schema: SCHEMA, command: config.command.to_string(), config, records, payload, pass, duration_seconds }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Tabular side output (paths, draws, plans, sequences).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// 17 significant digits, enough to recover any `f64` exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// One row per record under the fixed header.
pub fn emit_csv<W: Write>(report: &Report, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in &report.records {
        if r.name.contains([',', '"', '\n', '\r']) {
            return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("record name {:?}", r.name)));
        }
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.name,
            fmt_f64(r.value),
            fmt_f64(r.target),
            fmt_opt(r.std_error),
            fmt_opt(r.z_score),
            r.pass
        )?;
    }
    Ok(())
}

/// Inverse of [`emit_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<Record>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err("missing or wrong header".into());
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
    let opt = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(format!("expected 6 fields: {line:?}"));
            }
            Ok(Record {
                name: f[0].to_string(),
                value: num(f[1])?,
                target: num(f[2])?,
                std_error: opt(f[3])?,
                z_score: opt(f[4])?,
                pass: f[5].parse().map_err(|e| format!("{:?}: {e}", f[5]))?,
            })
        })
        .collect()
}

//! Campaign results and their CSV / JSON emission.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::stats::ScalingFit;

/// Version of the CSV / JSON schemas documented in `docs/schemas.md`.
pub const SCHEMA_VERSION: u32 = 1;

/// Lineage columns that open every table.
pub const LINEAGE: [&str; 4] = ["seed", "stream", "field", "path"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Value {
    fn csv(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            // Shortest representation that round-trips, as in the JSON files.
            Value::Float(v) if v.is_finite() => format!("{v:?}"),
            Value::Float(v) => v.to_string(),
            Value::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Value::Int(v) => (*v).into(),
            Value::Float(v) if v.is_finite() => (*v).into(),
            Value::Float(v) => v.to_string().into(),
            Value::Text(s) => s.clone().into(),
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v as i64)
    }
}

impl From<u32> for Value {
    fn from(v: u32) -> Self {
        Value::Int(i64::from(v))
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Int(i64::from(v))
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

/// Human-readable number: scientific notation outside `[1e-3, 1e6)`.
pub fn num(v: f64) -> String {
    if v == 0.0 || !v.is_finite() || (1e-3..1e6).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Substream coordinates of a row. `field` and `path` are an index, a
/// half-open range `a..b`, or `-` when the row draws no randomness of that kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Lineage {
    pub seed: u64,
    pub stream: &'static str,
    pub field: String,
    pub path: String,
}

impl Lineage {
    pub fn new(seed: u64, stream: &'static str, field: impl ToString, path: impl ToString) -> Self {
        Self {
            seed,
            stream,
            field: field.to_string(),
            path: path.to_string(),
        }
    }

    pub fn range(a: usize, b: usize) -> String {
        format!("{a}..{b}")
    }
}

/// A table of records; the first four columns are the [`LINEAGE`] columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: LINEAGE.iter().chain(columns).map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, lineage: &Lineage, values: Vec<Value>) {
        assert_eq!(values.len() + LINEAGE.len(), self.columns.len(), "row width in table {}", self.name);
        let mut row = vec![
            Value::Int(lineage.seed as i64),
            Value::Text(lineage.stream.to_string()),
            Value::Text(lineage.field.clone()),
            Value::Text(lineage.path.clone()),
        ];
        row.extend(values);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Value::csv))?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| serde_json::Value::Array(r.iter().map(Value::json).collect()))
            .collect();
        let doc = serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "table": self.name,
            "columns": self.columns,
            "rows": rows,
        });
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

/// One pass/fail check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub target: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub checks: Vec<Check>,
    pub fits: BTreeMap<String, ScalingFit>,
    pub values: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl Summary {
    pub fn check(&mut self, name: impl Into<String>, passed: bool, value: f64, target: impl Into<String>, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            value,
            target: target.into(),
            detail: detail.into(),
        });
    }

    pub fn value(&mut self, name: impl Into<String>, v: f64) {
        self.values.insert(name.into(), v);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Merge `other` with every key prefixed by `prefix/`.
    pub fn absorb(&mut self, prefix: &str, other: Summary) {
        for mut c in other.checks {
            c.name = format!("{prefix}/{}", c.name);
            self.checks.push(c);
        }
        for (k, v) in other.fits {
            self.fits.insert(format!("{prefix}/{k}"), v);
        }
        for (k, v) in other.values {
            self.values.insert(format!("{prefix}/{k}"), v);
        }
        self.warnings.extend(other.warnings.into_iter().map(|w| format!("{prefix}: {w}")));
    }
}

/// Everything a campaign produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub campaign: String,
    pub config_hash: String,
    pub tables: Vec<Table>,
    pub summary: Summary,
    /// Wall-clock seconds; written to a separate file so that the other
    /// outputs stay byte-identical across runs.
    pub wall_clock: f64,
}

impl CampaignResult {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn passed(&self) -> bool {
        self.summary.all_passed()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Write the tables in `formats`, the summary and the timing file into
/// `dir`; returns the written paths. The summary records the configuration
/// without its output directory so that reruns elsewhere compare equal.
pub fn emit(result: &CampaignResult, config: &super::ExperimentConfig, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let c = &result.campaign;
    for table in &result.tables {
        for f in formats {
            let (ext, body) = match f {
                Format::Csv => ("csv", table.to_csv()?),
                Format::Json => ("json", table.to_json()?),
            };
            let path = dir.join(format!("{c}.{}.{ext}", table.name));
            std::fs::write(&path, body)?;
            written.push(path);
        }
    }
    let summary = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "campaign": c,
        "config_hash": result.config_hash,
        "config": super::ExperimentConfig {
            output: PathBuf::new(),
            ..config.clone()
        },
        "passed": result.passed(),
        "tables": result.tables.iter().map(|t| &t.name).collect::<Vec<_>>(),
        "summary": result.summary,
    });
    let path = dir.join(format!("{c}.summary.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&summary)?)?;
    written.push(path);
    let timing = serde_json::json!({ "campaign": c, "config_hash": result.config_hash, "wall_clock_seconds": result.wall_clock });
    let path = dir.join(format!("{c}.timing.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&timing)?)?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("demo", &["r", "value", "censored"]);
        t.push(&Lineage::new(3, "path", 0, 5), vec![0.25.into(), (1.0 / 3.0).into(), false.into()]);
        t.push(&Lineage::new(3, "path", 1, Lineage::range(0, 4)), vec![1.0.into(), 1e-300.into(), true.into()]);
        t
    }

    #[test]
    fn csv_and_json_carry_identical_numbers() {
        let t = sample();
        let csv_text = t.to_csv().unwrap();
        let json: serde_json::Value = serde_json::from_str(&t.to_json().unwrap()).unwrap();
        let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
        for (rec, row) in reader.records().zip(json["rows"].as_array().unwrap()) {
            let rec = rec.unwrap();
            let row = row.as_array().unwrap();
            assert_eq!(rec.len(), row.len());
            for (c, j) in rec.iter().zip(row) {
                match j {
                    serde_json::Value::Number(n) => assert_eq!(c.parse::<f64>().unwrap(), n.as_f64().unwrap()),
                    serde_json::Value::String(s) => assert_eq!(c, s),
                    other => panic!("unexpected {other}"),
                }
            }
        }
    }

    #[test]
    fn lineage_columns_come_first() {
        let t = sample();
        assert_eq!(&t.columns[..4], &LINEAGE.map(String::from));
    }
}

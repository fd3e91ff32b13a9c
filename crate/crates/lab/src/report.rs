//! Reports: a JSON summary plus one CSV per table.

use khessian::torus::{write_field, StoredField};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// One pass/fail verdict. `id` names the acceptance criterion (`AC1` …
/// `AC10`) the check implements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub name: String,
    /// The inequality or identity being tested, in words.
    pub statement: String,
    pub pass: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    pub fn new(id: &str, name: &str, statement: &str) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            statement: statement.into(),
            pass: false,
            measured: f64::NAN,
            threshold: f64::NAN,
            detail: String::new(),
        }
    }

    /// `measured ≤ threshold`.
    pub fn at_most(mut self, measured: f64, threshold: f64) -> Self {
        self.measured = measured;
        self.threshold = threshold;
        self.pass = measured <= threshold;
        self
    }

    /// `measured ≥ threshold`.
    pub fn at_least(mut self, measured: f64, threshold: f64) -> Self {
        self.measured = measured;
        self.threshold = threshold;
        self.pass = measured >= threshold;
        self
    }

    pub fn verdict(mut self, pass: bool) -> Self {
        self.pass = self.pass && pass;
        self
    }

    pub fn detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    /// A check that could not run.
    pub fn errored(id: &str, name: &str, statement: &str, err: impl std::fmt::Display) -> Self {
        Self::new(id, name, statement).detail(format!("error: {err}"))
    }

    /// `AC3 PASS envelope-rate: measured 1.2e-3 (threshold 1e-3) …`
    pub fn line(&self) -> String {
        format!(
            "{} {} {}: measured {:.6e} (threshold {:.6e}){}{}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.threshold,
            if self.detail.is_empty() { "" } else { "; " },
            self.detail
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => float17(*x),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}
impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}
impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}
impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

/// 17 significant digits, `.` decimal separator.
pub fn float17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[j] {
                    Cell::Float(x) => *x,
                    Cell::Int(i) => *i as f64,
                    Cell::Bool(b) => f64::from(u8::from(*b)),
                    Cell::Text(_) => f64::NAN,
                })
                .collect(),
        )
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub experiment: String,
    pub seed: u64,
    /// The validated configuration, echoed.
    pub inputs: serde_json::Value,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    /// Table names; the rows go to CSV files.
    pub tables: Vec<String>,
    #[serde(skip)]
    pub table_data: Vec<Table>,
    #[serde(skip)]
    pub fields: Vec<(String, StoredField)>,
}

impl Report {
    pub fn new(experiment: &str, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            seed,
            inputs: serde_json::Value::Null,
            ..Self::default()
        }
    }

    pub fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    pub fn add_table(&mut self, table: Table) {
        self.tables.push(table.name.clone());
        self.table_data.push(table);
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.table_data.iter().find(|t| t.name == name)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Folds another report's checks, metrics (prefixed), tables and
    /// warnings into this one.
    pub fn absorb(&mut self, prefix: &str, other: Report) {
        for (k, v) in other.metrics {
            self.metrics.insert(format!("{prefix}.{k}"), v);
        }
        self.checks.extend(other.checks);
        self.warnings.extend(other.warnings);
        for t in other.table_data {
            self.add_table(t);
        }
    }
}

/// Writes `summary.json`, one CSV per table and any attached fields.
/// Returns the written paths, summary first.
pub fn write_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    let summary = dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(&summary, text)?;
    paths.push(summary);
    for table in &report.table_data {
        let path = dir.join(format!("{}.csv", table.name));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&table.columns)?;
        for row in &table.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        paths.push(path);
    }
    for (name, field) in &report.fields {
        let (data, meta) = write_field(&dir.join(format!("{name}.bin")), field, BTreeMap::new())?;
        paths.push(data);
        paths.push(meta);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(float17(0.1), "1.0000000000000001e-1");
        assert_eq!(float17(-2.5), "-2.5000000000000000e0");
        assert_eq!(0.1f64, float17(0.1).parse::<f64>().unwrap());
    }

    #[test]
    fn empty_report_writes_only_the_summary() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_report(&Report::new("verify", 0), dir.path()).unwrap();
        assert_eq!(paths, vec![dir.path().join("summary.json")]);
    }

    #[test]
    fn tables_become_csv() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = Report::new("stability", 1);
        let mut t = Table::new("stability", &["t", "lp", "sup"]);
        t.push(vec![0.5.into(), 1.0.into(), 2usize.into()]);
        r.add_table(t);
        let paths = write_report(&r, dir.path()).unwrap();
        assert_eq!(paths.len(), 2);
        let body = std::fs::read_to_string(&paths[1]).unwrap();
        assert_eq!(body, "t,lp,sup\n5.0000000000000000e-1,1.0000000000000000e0,2\n");
    }
}

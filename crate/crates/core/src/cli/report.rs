use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Md,
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(title: &str, columns: &[&str]) -> Self {
        Self {
            title: title.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        if !self.title.is_empty() {
            let _ = writeln!(s, "### {}\n", self.title);
        }
        let _ = writeln!(s, "| {} |", self.columns.join(" | "));
        let _ = writeln!(s, "|{}", "---|".repeat(self.columns.len()));
        for r in &self.rows {
            let _ = writeln!(s, "| {} |", r.join(" | "));
        }
        s
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// One pass/fail line. Only asserted checks decide the exit code.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub asserted: bool,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub timestamp_unix: u64,
    pub elapsed_ms: u128,
    /// Run-dependent extras such as search node counts.
    pub notes: serde_json::Map<String, Value>,
}

impl Metadata {
    pub fn new(command: &str, seed: u64, jobs: Option<usize>) -> Self {
        Self {
            tool: "ect",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            jobs,
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            elapsed_ms: 0,
            notes: serde_json::Map::new(),
        }
    }
}

/// Everything a command produces. `data` is a pure function of the inputs
/// and seed; anything that varies between runs belongs in `metadata`.
#[derive(Clone, Debug)]
pub struct Report {
    pub name: String,
    pub data: Value,
    pub tables: Vec<Table>,
    pub checks: Vec<CheckLine>,
    pub text: Vec<String>,
    pub metadata: Metadata,
}

#[derive(Serialize)]
struct JsonOut<'a> {
    data: &'a Value,
    checks: &'a [CheckLine],
    metadata: &'a Metadata,
}

impl Report {
    pub fn new(name: &str, metadata: Metadata) -> Self {
        Self {
            name: name.to_string(),
            data: Value::Null,
            tables: Vec::new(),
            checks: Vec::new(),
            text: Vec::new(),
            metadata,
        }
    }

    pub fn check(&mut self, name: &str, asserted: bool, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckLine {
            name: name.to_string(),
            asserted,
            passed,
            detail: detail.into(),
        });
    }

    pub fn failed(&self) -> bool {
        self.checks.iter().any(|c| c.asserted && !c.passed)
    }

    pub fn to_markdown(&self) -> String {
        let mut s = format!("## {}\n\n", self.name);
        for t in &self.text {
            let _ = writeln!(s, "{t}");
        }
        if !self.text.is_empty() {
            s.push('\n');
        }
        for t in &self.tables {
            s.push_str(&t.to_markdown());
            s.push('\n');
        }
        for c in &self.checks {
            let tag = match (c.passed, c.asserted) {
                (true, _) => "PASS",
                (false, true) => "FAIL",
                (false, false) => "NOTE",
            };
            let _ = writeln!(s, "{tag} {}: {}", c.name, c.detail);
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&JsonOut {
            data: &self.data,
            checks: &self.checks,
            metadata: &self.metadata,
        })?)
    }

    /// Tables as CSV, separated by a blank line.
    pub fn to_csv(&self) -> Result<String> {
        let parts: Vec<String> = self.tables.iter().map(Table::to_csv).collect::<Result<_>>()?;
        Ok(parts.join("\n"))
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Md => Ok(self.to_markdown()),
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    /// Writes `<name>.json`, `<name>.csv` and `<name>.md` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let stem = self.name.replace(' ', "_");
        fs::write(dir.join(format!("{stem}.json")), self.to_json()?)?;
        fs::write(dir.join(format!("{stem}.csv")), self.to_csv()?)?;
        fs::write(dir.join(format!("{stem}.md")), self.to_markdown())?;
        Ok(())
    }
}

pub fn f(v: f64, digits: usize) -> String {
    format!("{v:.digits$}")
}

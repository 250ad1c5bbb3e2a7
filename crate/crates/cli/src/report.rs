use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when value ≤ bound.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, pass: value <= bound }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), value: if ok { 1.0 } else { 0.0 }, bound: 1.0, pass: ok }
    }
}

/// Everything one run produces: a table, a summary object and pass/fail checks.
pub struct Report {
    pub command: &'static str,
    /// Flag name → value, in command-line order; enough to rebuild the invocation.
    pub params: Vec<(&'static str, Value)>,
    pub seed: Option<u64>,
    /// Extra material echoed into the manifest (e.g. a parsed config file).
    pub config: Option<Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summary: Value,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Report {
            command,
            params: Vec::new(),
            seed: None,
            config: None,
            columns: Vec::new(),
            rows: Vec::new(),
            summary: Value::Null,
            checks: Vec::new(),
        }
    }

    pub fn param(&mut self, name: &'static str, v: impl Serialize) {
        self.params.push((name, serde_json::to_value(v).expect("serializable parameter")));
    }

    pub fn columns(&mut self, cols: &[&str]) {
        self.columns = cols.iter().map(|c| c.to_string()).collect();
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Shell-ready command line reproducing this run.
    pub fn rerun(&self) -> String {
        let mut s = format!("lorentz-lab {}", self.command);
        for (k, v) in &self.params {
            let v = match v {
                Value::String(x) => x.clone(),
                other => other.to_string(),
            };
            s.push_str(&format!(" --{k} {v}"));
        }
        if let Some(seed) = self.seed {
            s.push_str(&format!(" --seed {seed}"));
        }
        s
    }

    /// No thread count or timestamps: the manifest must not vary between equivalent runs.
    pub fn manifest(&self) -> Value {
        let mut params = Map::new();
        for (k, v) in &self.params {
            params.insert(k.to_string(), v.clone());
        }
        let mut m = json!({
            "tool": "lorentz-lab",
            "version": env!("CARGO_PKG_VERSION"),
            "library_version": lorentz_lab::VERSION,
            "command": self.command,
            "params": params,
            "seed": self.seed,
            "rerun": self.rerun(),
        });
        if let Some(c) = &self.config {
            m["config"] = c.clone();
        }
        m
    }

    pub fn json(&self) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "manifest": self.manifest(),
            "columns": self.columns,
            "rows": self.rows,
            "summary": self.summary,
            "checks": self.checks,
            "passed": self.passed(),
        })
    }

    pub fn csv_body(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }

    pub fn csv_file(&self) -> Result<String> {
        Ok(format!("# manifest {}\n{}", serde_json::to_string(&self.manifest())?, self.csv_body()?))
    }

    pub fn json_text(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.json())? + "\n")
    }

    /// Writes `<command>.csv` and `<command>.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        let csv_path = dir.join(format!("{}.csv", self.command));
        let json_path = dir.join(format!("{}.json", self.command));
        fs::write(&csv_path, self.csv_file()?).with_context(|| format!("writing {}", csv_path.display()))?;
        fs::write(&json_path, self.json_text()?).with_context(|| format!("writing {}", json_path.display()))?;
        Ok((csv_path, json_path))
    }
}

/// Shortest round-trip decimal; scientific notation outside [1e−4, 1e15).
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;

use serde_json::{json, Value};

use crate::config::{OutputFormat, RunConfig};
use crate::error::CliError;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Check {
    /// NaN residuals fail.
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }

    fn to_value(&self) -> Value {
        json!({
            "name": self.name,
            "status": if self.passed() { "pass" } else { "fail" },
            "residual": float(self.residual),
            "tolerance": float(self.tolerance),
            "samples": self.samples,
            "seed": self.seed,
        })
    }
}

/// A residual table exported as CSV in `json+csv` mode.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(csv_cell).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub suite: String,
    pub checks: Vec<Check>,
    pub data: Value,
    pub tables: Vec<Table>,
    /// Plot-ready tables written whenever an output directory is set.
    pub artifacts: Vec<Table>,
    pub wall_time: Option<f64>,
}

impl Report {
    pub fn new(suite: &str) -> Self {
        Report {
            suite: suite.into(),
            checks: Vec::new(),
            data: Value::Object(Default::default()),
            tables: Vec::new(),
            artifacts: Vec::new(),
            wall_time: None,
        }
    }

    pub fn check(&mut self, cfg: &RunConfig, name: &str, residual: f64, default_tol: f64, samples: usize) {
        self.checks.push(Check {
            name: name.into(),
            residual,
            tolerance: cfg.tolerance(name, default_tol),
            samples,
            seed: cfg.seed,
        });
    }

    /// Boolean outcome as a 0/1 residual against tolerance ½.
    pub fn check_bool(&mut self, cfg: &RunConfig, name: &str, ok: bool, samples: usize) {
        self.check(cfg, name, if ok { 0.0 } else { 1.0 }, 0.5, samples);
    }

    pub fn set(&mut self, key: &str, value: Value) {
        if let Value::Object(m) = &mut self.data {
            m.insert(key.into(), value);
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn to_value(&self) -> Value {
        let mut v = json!({
            "schemaVersion": SCHEMA_VERSION,
            "suite": self.suite,
            "version": concat!("frobforge ", env!("CARGO_PKG_VERSION")),
            "checks": self.checks.iter().map(Check::to_value).collect::<Vec<_>>(),
            "data": self.data,
        });
        if let Some(t) = self.wall_time {
            v["wallTimeSeconds"] = float(t);
        }
        v
    }

    pub fn to_json(&self) -> String {
        let mut s = String::new();
        write_canonical(&mut s, &self.to_value(), 0);
        s.push('\n');
        s
    }

    pub fn emit(&self, cfg: &RunConfig) -> Result<(), CliError> {
        for c in &self.checks {
            eprintln!(
                "[{}] {} residual {} tolerance {}",
                if c.passed() { "pass" } else { "FAIL" },
                c.name,
                format_float(c.residual),
                format_float(c.tolerance)
            );
        }
        let Some(dir) = &cfg.out else {
            print!("{}", self.to_json());
            return Ok(());
        };
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(format!("{}.json", self.suite));
        fs::write(&path, self.to_json()).map_err(|e| CliError::io(&path, e))?;
        let csv_tables = if cfg.format == OutputFormat::JsonCsv { &self.tables[..] } else { &[] };
        for t in csv_tables.iter().chain(&self.artifacts) {
            let path = dir.join(format!("{}_{}.csv", self.suite, t.name));
            fs::write(&path, t.to_csv()).map_err(|e| CliError::io(&path, e))?;
        }
        Ok(())
    }
}

/// Non-finite floats have no JSON number form, so they travel as strings.
pub fn float(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(format_float(x)))
}

/// C-style `%.12e`: `1.000000000000e+00`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => format_float(n.as_f64().unwrap_or(f64::NAN)),
        Value::Number(n) => n.to_string(),
        Value::String(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn write_canonical(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) if n.is_f64() => out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN))),
        Value::Number(n) => out.push_str(&n.to_string()),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_canonical(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let sorted: BTreeMap<&String, &Value> = map.iter().collect();
            out.push_str("{\n");
            for (i, (k, item)) in sorted.iter().enumerate() {
                let _ = write!(out, "{}{}: ", pad(indent + 1), Value::String((*k).clone()));
                write_canonical(out, item, indent + 1);
                out.push_str(if i + 1 < sorted.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_c_style() {
        assert_eq!(format_float(1.0), "1.000000000000e+00");
        assert_eq!(format_float(-2.5e-7), "-2.500000000000e-07");
        assert_eq!(format_float(1.0e123), "1.000000000000e+123");
        assert_eq!(format_float(0.0), "0.000000000000e+00");
        assert_eq!(format_float(f64::NAN), "NaN");
    }

    #[test]
    fn canonical_json_sorts_keys_and_formats_numbers() {
        let v = json!({"b": 1, "a": [0.5, 2], "c": {}});
        let mut s = String::new();
        write_canonical(&mut s, &v, 0);
        assert_eq!(s, "{\n  \"a\": [\n    5.000000000000e-01,\n    2\n  ],\n  \"b\": 1,\n  \"c\": {}\n}");
        let parsed: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(parsed["a"][0], json!(0.5));
    }

    #[test]
    fn empty_report_is_valid_json() {
        let r = Report::new("empty");
        assert!(r.passed());
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["checks"], json!([]));
        assert_eq!(v["schemaVersion"], json!(SCHEMA_VERSION));
        assert!(v.get("wallTimeSeconds").is_none());
    }

    #[test]
    fn nan_residual_fails() {
        let c = Check { name: "x".into(), residual: f64::NAN, tolerance: 1.0, samples: 1, seed: 0 };
        assert!(!c.passed());
        let c = Check { residual: 1.0, ..c };
        assert!(c.passed());
    }

    #[test]
    fn csv_quotes_commas() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec![json!("x,y"), json!(0.25)]);
        assert_eq!(t.to_csv(), "a,b\n\"x,y\",2.500000000000e-01\n");
    }
}

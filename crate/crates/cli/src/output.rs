use std::io::Write;
use std::path::Path;

use dhkit::io::number;
use serde_json::{Map, Value};

use crate::{Failure, Format};

/// What a command produced. Object keys are sorted on output, so equal
/// reports serialize to identical bytes.
pub struct Report {
    pub command: &'static str,
    pub body: Map<String, Value>,
    pub csv: String,
    pub warnings: Vec<String>,
    pub tol: f64,
    /// Set when the report is complete but a checked property failed.
    pub failed: Option<String>,
}

impl Report {
    pub fn new(command: &'static str, tol: f64) -> Self {
        Self {
            command,
            body: Map::new(),
            csv: String::new(),
            warnings: Vec::new(),
            tol,
            failed: None,
        }
    }

    pub fn set(&mut self, key: &str, v: Value) {
        self.body.insert(key.to_string(), v);
    }

    pub fn to_json(&self) -> String {
        let mut o = self.body.clone();
        o.insert("command".into(), Value::String(self.command.into()));
        o.insert("tol".into(), number(self.tol));
        o.insert(
            "warnings".into(),
            Value::Array(self.warnings.iter().cloned().map(Value::String).collect()),
        );
        let mut s = serde_json::to_string_pretty(&Value::Object(o)).expect("JSON values serialize");
        s.push('\n');
        s
    }
}

pub fn emit(r: &Report, format: Format, path: Option<&Path>) -> Result<(), Failure> {
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    let text = match format {
        Format::Json => r.to_json(),
        Format::Csv => r.csv.clone(),
    };
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Input(format!("cannot write to stdout: {e}")))
        }
    }
}

/// A float in a CSV cell, 17 significant digits.
pub fn cell(x: f64) -> String {
    format!("{x:.16e}")
}

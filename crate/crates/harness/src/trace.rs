//! Trace output: a CSV file plus a JSON sidecar embedding the resolved
//! configuration, so any run can be reproduced from its own outputs.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::HarnessError;

/// One CSV cell. Floats print with Rust's shortest round-trip formatting,
/// so identical values always yield identical bytes; absent values (e.g. a
/// degenerate decode) print as NaN.
#[derive(Debug, Clone, Copy)]
pub enum Cell {
    Int(i64),
    Float(f64),
    OptFloat(Option<f64>),
    Str(&'static str),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => write!(f, "{v}"),
            Cell::OptFloat(Some(v)) => write!(f, "{v}"),
            Cell::OptFloat(None) => write!(f, "NaN"),
            Cell::Str(s) => write!(f, "{s}"),
        }
    }
}

pub struct TraceWriter {
    columns: Vec<String>,
    body: String,
}

impl TraceWriter {
    pub fn new(columns: &[&str]) -> Self {
        let mut body = String::new();
        let _ = writeln!(body, "{}", columns.join(","));
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), body }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        debug_assert_eq!(cells.len(), self.columns.len());
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.body.push(',');
            }
            let _ = write!(self.body, "{c}");
        }
        self.body.push('\n');
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn bytes(&self) -> &[u8] {
        self.body.as_bytes()
    }
}

/// Sidecar metadata: everything needed to reproduce the trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceMeta {
    pub scenario: String,
    pub seed: u64,
    pub ablation: bool,
    pub columns: Vec<String>,
    pub config: ScenarioConfig,
}

pub struct ScenarioOutput {
    pub trace_path: PathBuf,
    pub meta_path: PathBuf,
    pub figure_path: PathBuf,
}

pub fn write_outputs(
    out_dir: &Path,
    meta: &TraceMeta,
    trace: &TraceWriter,
    svg: &str,
) -> Result<ScenarioOutput, HarnessError> {
    fs::create_dir_all(out_dir)
        .map_err(|e| HarnessError::runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    let trace_path = out_dir.join("trace.csv");
    let meta_path = out_dir.join("trace.meta.json");
    let figure_path = out_dir.join("figure.svg");

    let mut f = fs::File::create(&trace_path)
        .map_err(|e| HarnessError::runtime(format!("cannot write {}: {e}", trace_path.display())))?;
    f.write_all(trace.bytes())
        .map_err(|e| HarnessError::runtime(format!("cannot write {}: {e}", trace_path.display())))?;

    let json = serde_json::to_string_pretty(meta)
        .map_err(|e| HarnessError::runtime(format!("cannot serialize metadata: {e}")))?;
    fs::write(&meta_path, json.as_bytes())
        .map_err(|e| HarnessError::runtime(format!("cannot write {}: {e}", meta_path.display())))?;

    fs::write(&figure_path, svg.as_bytes())
        .map_err(|e| HarnessError::runtime(format!("cannot write {}: {e}", figure_path.display())))?;

    Ok(ScenarioOutput { trace_path, meta_path, figure_path })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_format_deterministically() {
        assert_eq!(Cell::Float(0.1).to_string(), "0.1");
        assert_eq!(Cell::Float(-2.5e-7).to_string(), "-0.00000025");
        assert_eq!(Cell::OptFloat(None).to_string(), "NaN");
        assert_eq!(Cell::Int(-3).to_string(), "-3");
    }

    #[test]
    fn writer_emits_header_and_rows() {
        let mut w = TraceWriter::new(&["a", "b"]);
        w.row(&[Cell::Int(1), Cell::Float(2.5)]);
        assert_eq!(std::str::from_utf8(w.bytes()).unwrap(), "a,b\n1,2.5\n");
    }
}

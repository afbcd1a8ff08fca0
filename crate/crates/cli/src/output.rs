//! Output plumbing: provenance headers, number formatting, status reports.

use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Decimal with 17 significant digits (round-trips every finite double).
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Joins formatted numbers into a CSV row.
pub fn row(values: &[f64]) -> String {
    values.iter().map(|&v| num(v)).collect::<Vec<_>>().join(",")
}

/// Identifies the program, command and effective flags of a run.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub program: String,
    pub version: String,
    pub command: String,
    pub flags: Vec<String>,
}

impl Provenance {
    pub fn new(command: &str, flags: Vec<String>) -> Self {
        Self {
            program: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            flags,
        }
    }

    /// The `#`-comment header line of CSV outputs.
    pub fn header(&self) -> String {
        format!("# {} {} {} {}", self.program, self.version, self.command, self.flags.join(" "))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Status {
    pub ok: bool,
    pub warnings: Vec<String>,
}

/// Writes `contents` to `path`, or to standard output when no path is given.
pub fn emit(path: Option<&Path>, contents: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, contents),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())?;
            out.flush()
        }
    }
}

/// `report.csv` → `report.atoms.json`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

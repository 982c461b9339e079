//! Result tables, plot curves, checks, and their files.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Named real columns, rows in a fixed order.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self, header: &Header) -> String {
        let mut s = header.lines();
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|&v| fmt_real(v)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// One curve written as two whitespace-separated columns.
#[derive(Debug, Clone)]
pub struct Plot {
    pub name: String,
    pub x: String,
    pub y: String,
    pub points: Vec<(f64, f64)>,
}

impl Plot {
    pub fn new(name: &str, x: &str, y: &str, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            x: x.into(),
            y: y.into(),
            points,
        }
    }

    pub fn to_dat(&self, header: &Header) -> String {
        let mut s = header.lines();
        let _ = writeln!(s, "# {} {}", self.x, self.y);
        for &(x, y) in &self.points {
            let _ = writeln!(s, "{} {}", fmt_real(x), fmt_real(y));
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub bound: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `value <= bound`; NaN fails.
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            pass: value <= bound,
            value,
            bound,
            detail: String::new(),
        }
    }

    pub fn flag(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            value: if pass { 1.0 } else { 0.0 },
            bound: 1.0,
            detail: detail.into(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Default)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub plots: Vec<Plot>,
    pub checks: Vec<Check>,
    /// Row-level failures that did not stop the run.
    pub notes: Vec<String>,
}

pub struct Header {
    pub command: String,
    pub config_sha256: String,
}

impl Header {
    fn lines(&self) -> String {
        format!(
            "# vk-ribbon {VERSION}\n# command {}\n# config-sha256 {}\n",
            self.command, self.config_sha256
        )
    }
}

/// 17 significant digits in scientific notation.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// SHA-256 of the resolved configuration in its canonical JSON form.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let text = serde_json::to_string(cfg).expect("configuration serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

/// Writes every table, plot and the manifest into `dir`.
pub fn write_all(
    dir: &Path,
    command: &str,
    cfg: &ExperimentConfig,
    threads: Option<usize>,
    out: &RunOutput,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let header = Header {
        command: command.into(),
        config_sha256: config_hash(cfg),
    };
    let mut files = Vec::new();
    for t in &out.tables {
        let p = dir.join(format!("{}.csv", t.name));
        write_atomic(&p, &t.to_csv(&header))?;
        files.push(p);
    }
    for c in &out.plots {
        let p = dir.join(format!("{}.dat", c.name));
        write_atomic(&p, &c.to_dat(&header))?;
        files.push(p);
    }
    let names: Vec<String> = files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let manifest = json!({
        "version": VERSION,
        "command": command,
        "config_sha256": header.config_sha256,
        "config": cfg,
        "threads": threads,
        "files": names,
        "checks": out.checks,
        "notes": out.notes,
    });
    let p = dir.join("manifest.json");
    write_atomic(&p, &format!("{}\n", serde_json::to_string_pretty(&manifest).expect("manifest serializes")))?;
    files.push(p);
    Ok(files)
}

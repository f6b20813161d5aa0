//! CSV and JSON report files. Everything is rendered in memory first and
//! written only once a command has finished computing.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

/// A CSV cell.
pub enum Cell {
    Num(f64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// 17 significant digits: enough to round-trip any f64.
pub fn format_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// A CSV document with a fixed header, kept in memory until written.
pub struct Csv {
    width: usize,
    writer: csv::Writer<Vec<u8>>,
}

impl Csv {
    pub fn new(header: &'static [&'static str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("writing to memory");
        Csv {
            width: header.len(),
            writer,
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.width);
        let fields = cells.into_iter().map(|c| match c {
            Cell::Num(v) => format_num(v),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s,
        });
        self.writer.write_record(fields).expect("writing to memory");
    }

    pub fn render(self) -> Result<String> {
        let bytes = self.writer.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes)?)
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    passed: bool,
    config: &'a RunConfig,
    results: Value,
}

pub fn render_json(command: &str, passed: bool, config: &RunConfig, results: Value) -> Result<String> {
    let r = JsonReport {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        passed,
        config,
        results,
    };
    Ok(serde_json::to_string_pretty(&r)? + "\n")
}

/// Files produced by one command, written together.
pub struct Outputs {
    files: Vec<(String, String)>,
}

impl Outputs {
    pub fn new() -> Self {
        Outputs { files: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    /// Writes each file through a temporary sibling and a rename, so a
    /// reader never sees a partial file.
    pub fn write(self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut written = Vec::new();
        for (name, contents) in self.files {
            let path = dir.join(&name);
            let tmp = dir.join(format!(".{name}.partial"));
            fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
            fs::rename(&tmp, &path).with_context(|| format!("renaming to {}", path.display()))?;
            written.push(path);
        }
        Ok(written)
    }
}

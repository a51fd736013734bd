use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const FORMAT: u32 = 1;

/// 17 significant digits, round-trip exact.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// A CSV file written under `<name>.incomplete` and renamed on [`CsvFile::finish`].
pub struct CsvFile {
    path: PathBuf,
    partial: PathBuf,
    out: BufWriter<File>,
}

impl CsvFile {
    pub fn create(dir: &Path, name: &str, comments: &[String], columns: &str) -> CliResult<Self> {
        ensure_dir(dir)?;
        let path = dir.join(name);
        let partial = dir.join(format!("{name}.incomplete"));
        let _ = fs::remove_file(&path);
        let file = File::create(&partial).map_err(|e| CliError::io(&partial, e))?;
        let mut csv = Self {
            path,
            partial,
            out: BufWriter::new(file),
        };
        csv.line(&format!("# su2-butterfly {VERSION} format {FORMAT}"))?;
        for c in comments {
            csv.line(&format!("# {c}"))?;
        }
        csv.line(columns)?;
        Ok(csv)
    }

    pub fn line(&mut self, text: &str) -> CliResult<()> {
        writeln!(self.out, "{text}").map_err(|e| CliError::io(&self.partial, e))
    }

    pub fn row(&mut self, fields: &[String]) -> CliResult<()> {
        self.line(&fields.join(","))
    }

    /// Flushes and moves the file to its final name.
    pub fn finish(mut self) -> CliResult<PathBuf> {
        self.out
            .flush()
            .map_err(|e| CliError::io(&self.partial, e))?;
        fs::rename(&self.partial, &self.path).map_err(|e| CliError::io(&self.path, e))?;
        Ok(self.path)
    }

    /// Flushes and leaves the `.incomplete` file in place.
    pub fn abandon(mut self) -> PathBuf {
        let _ = self.out.flush();
        self.partial
    }
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Contents of every `meta.json`.
#[derive(Debug, Serialize)]
pub struct Meta<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub format: u32,
    pub command: &'a str,
    pub argv: Vec<String>,
    pub config: &'a C,
    pub results: R,
}

impl<'a, C: Serialize, R: Serialize> Meta<'a, C, R> {
    pub fn new(command: &'a str, config: &'a C, results: R) -> Self {
        Self {
            tool: "su2-butterfly",
            version: VERSION,
            format: FORMAT,
            command,
            argv: std::env::args().collect(),
            config,
            results,
        }
    }
}

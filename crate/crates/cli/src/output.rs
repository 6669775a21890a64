use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// 17 significant digits, enough to round-trip any f64.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

/// Comma-separated, LF-terminated rows behind a buffered file.
pub struct CsvWriter {
    path: PathBuf,
    out: BufWriter<File>,
    pub rows: u64,
}

impl CsvWriter {
    pub fn create(path: PathBuf, header: &[String]) -> Result<Self> {
        let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        let mut w = CsvWriter {
            path,
            out: BufWriter::new(file),
            rows: 0,
        };
        w.line(header)?;
        w.rows = 0;
        Ok(w)
    }

    fn line(&mut self, fields: &[String]) -> Result<()> {
        let text = fields.join(",");
        writeln!(self.out, "{text}").with_context(|| format!("cannot write {}", self.path.display()))?;
        self.rows += 1;
        Ok(())
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        self.line(fields)
    }

    pub fn finish(mut self) -> Result<u64> {
        self.out.flush().with_context(|| format!("cannot write {}", self.path.display()))?;
        Ok(self.rows)
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'static str,
    command: &'a str,
    config: &'a RunConfig,
    #[serde(flatten)]
    result: &'a T,
}

/// Pretty JSON with the code version and the resolved configuration.
pub fn write_summary<T: Serialize>(path: &Path, command: &str, config: &RunConfig, result: &T) -> Result<()> {
    let envelope = Envelope {
        version: VERSION,
        command,
        config,
        result,
    };
    let mut text = serde_json::to_string_pretty(&envelope)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

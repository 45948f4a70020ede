use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::Result;

/// Output directory. Every file is written to a temporary sibling and renamed into
/// place, so readers never see a partial file.
#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(OutputDir { root })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let dest = self.root.join(name);
        let dir = dest.parent().unwrap_or(&self.root);
        std::fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        tmp.flush()?;
        tmp.persist(&dest).map_err(|e| e.error)?;
        Ok(dest)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write_bytes(name, s.as_bytes())
    }

    /// Rows serialized with a header taken from the first row's field names.
    pub fn write_csv<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<PathBuf> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        self.write_bytes(name, &bytes)
    }

    /// Rows with an explicit header, for tables whose width depends on the run.
    pub fn write_table(&self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<PathBuf> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        self.write_bytes(name, &bytes)
    }
}

/// The JSON record written once per run.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord<C: Serialize, R: Serialize> {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config: C,
    pub results: R,
    pub files: Vec<String>,
}

impl<C: Serialize, R: Serialize> RunRecord<C, R> {
    pub fn new(command: &'static str, seed: u64, config: C, results: R) -> Self {
        RunRecord { command, version: env!("CARGO_PKG_VERSION"), seed, config, results, files: Vec::new() }
    }
}

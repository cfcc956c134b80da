use std::io::Write;
use std::path::{Path, PathBuf};

use maxrep::{Error, Result};
use serde::Serialize;

use crate::Format;

/// Where and how a command writes its main result.
pub struct Sink {
    pub format: Format,
    pub out: Option<PathBuf>,
}

/// Twelve significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

impl Sink {
    pub fn emit(&self, bytes: &[u8]) -> Result<()> {
        match &self.out {
            Some(path) => write_atomic(path, bytes),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(bytes)?;
                stdout.flush()?;
                Ok(())
            }
        }
    }

    /// CSV from a header and rows, or pretty JSON of `value`.
    pub fn table<T: Serialize>(&self, header: &[&str], rows: &[Vec<String>], value: &T) -> Result<()> {
        match self.format {
            Format::Json => self.json(value),
            Format::Csv => self.emit(&csv_bytes(header, rows)?),
        }
    }

    pub fn json<T: Serialize>(&self, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.emit(&bytes)
    }
}

pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Data(e.to_string());
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(row).map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Data(e.to_string()))
}

//! Newline-delimited JSON store of [`SigmaRecord`]s.
//!
//! Each line carries a schema version. Loading re-evaluates every witness
//! and sets aside records whose stored value disagrees.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::SigmaRecord;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Line {
    schema_version: u32,
    #[serde(flatten)]
    record: SigmaRecord,
}

/// Result of reading a cache file.
#[derive(Debug, Default)]
pub struct Loaded {
    pub records: Vec<SigmaRecord>,
    /// `(line number, reason)` for every rejected line.
    pub quarantined: Vec<(usize, String)>,
}

/// Reads `path`; a missing file is an empty cache.
pub fn load(path: &Path) -> Result<Loaded> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Loaded::default()),
        Err(e) => return Err(Error::Data(format!("cannot read {}: {e}", path.display()))),
    };
    let mut out = Loaded::default();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = match serde_json::from_str(&line) {
            Ok(p) => p,
            Err(e) => {
                log::warn!("{}:{lineno}: skipping malformed record: {e}", path.display());
                out.quarantined.push((lineno, e.to_string()));
                continue;
            }
        };
        if parsed.schema_version != SCHEMA_VERSION {
            let reason = format!("schema version {} is not {SCHEMA_VERSION}", parsed.schema_version);
            log::warn!("{}:{lineno}: {reason}", path.display());
            out.quarantined.push((lineno, reason));
            continue;
        }
        match parsed.record.verify() {
            Ok(()) => out.records.push(parsed.record),
            Err(e) => {
                log::warn!("{}:{lineno}: quarantined: {e}", path.display());
                out.quarantined.push((lineno, e.to_string()));
            }
        }
    }
    Ok(out)
}

/// Appends records to `path`, creating it if needed.
pub fn append(path: &Path, records: &[SigmaRecord]) -> Result<()> {
    static WRITER: Mutex<()> = Mutex::new(());
    let _guard = WRITER.lock().unwrap_or_else(|p| p.into_inner());
    let mut buf = Vec::new();
    for record in records {
        serde_json::to_writer(&mut buf, &Line { schema_version: SCHEMA_VERSION, record: record.clone() })?;
        buf.push(b'\n');
    }
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    file.write_all(&buf)?;
    file.flush()?;
    Ok(())
}

//! Append-only JSON-lines run cache.
//!
//! Each line is a [`RunRecord`]. The key is the lowercase hex SHA-256 of the
//! compact JSON text of `{"command": .., "params": .., "version": ..}` with
//! object keys sorted, so it depends only on what was asked for and on the
//! tool version. The payload is the exact text written to stdout.

use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub key: String,
    pub command: String,
    pub params: Value,
    pub version: String,
    pub wall_time_seconds: f64,
    pub payload: String,
}

/// Canonical hash of a request. `serde_json` maps keep keys sorted, so the
/// compact rendering is canonical.
pub fn cache_key(command: &str, params: &Value) -> String {
    let canonical = json!({ "command": command, "params": params, "version": VERSION }).to_string();
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Latest record with `key`, if any. Unparseable lines are skipped.
pub fn lookup(path: &Path, key: &str) -> Result<Option<RunRecord>> {
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e).with_context(|| format!("opening cache {}", path.display())),
    };
    let mut found = None;
    for line in BufReader::new(file).lines() {
        let line = line.with_context(|| format!("reading cache {}", path.display()))?;
        if let Ok(record) = serde_json::from_str::<RunRecord>(&line) {
            if record.key == key && record.version == VERSION {
                found = Some(record);
            }
        }
    }
    Ok(found)
}

pub fn append(path: &Path, record: &RunRecord) -> Result<()> {
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening cache {}", path.display()))?;
    let mut line = serde_json::to_string(record)?;
    line.push('\n');
    file.write_all(line.as_bytes()).with_context(|| format!("writing cache {}", path.display()))
}

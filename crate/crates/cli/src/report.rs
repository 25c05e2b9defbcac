use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use mixcoef::{Error, ScheduleConfig, ScheduleValues};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub argv: Vec<String>,
    pub input: Value,
    pub schedule_config: ScheduleConfig,
    pub schedule: ScheduleValues,
    pub budget: Value,
    pub solver: Value,
    pub seed: Option<u64>,
    pub result: Value,
}

impl Report {
    pub fn to_text(&self) -> String {
        let mut body = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(map) = &mut body {
            map.insert("schema".into(), SCHEMA.into());
        }
        to_text(&body)
    }
}

pub fn to_text(body: &Value) -> String {
    let mut text = serde_json::to_string_pretty(body).expect("json serializes");
    text.push('\n');
    text
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes to `path` through a temporary file in the same directory, or to
/// stdout when no path is given.
pub fn write_output(path: Option<&Path>, text: &str) -> mixcoef::Result<()> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes())?;
        return Ok(out.flush()?);
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(text.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

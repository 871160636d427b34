//! Artifact emission: atomically written CSV tables with a config-hash
//! header, plus a JSON run record pairing every file with its settings.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::CliError;

/// Write `content` to `dir/name` via a temp file renamed into place.
pub fn write_atomic(dir: &Path, name: &str, content: &[u8]) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("create {}: {e}", dir.display())))?;
    let final_path = dir.join(name);
    let tmp_path = dir.join(format!(".{name}.tmp"));
    {
        let mut f = std::fs::File::create(&tmp_path)
            .map_err(|e| CliError::Io(format!("create {}: {e}", tmp_path.display())))?;
        f.write_all(content)
            .map_err(|e| CliError::Io(format!("write {}: {e}", tmp_path.display())))?;
        f.sync_all().ok();
    }
    std::fs::rename(&tmp_path, &final_path)
        .map_err(|e| CliError::Io(format!("rename to {}: {e}", final_path.display())))?;
    Ok(final_path)
}

/// CSV table with 17-significant-digit floats and `#` metadata lines.
pub struct CsvTable {
    buf: String,
}

impl CsvTable {
    pub fn new(config_hash: &str, comments: &[&str], columns: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(&format!("# config_hash = {config_hash}\n"));
        for c in comments {
            buf.push_str(&format!("# {c}\n"));
        }
        if !columns.is_empty() {
            buf.push_str(&columns.join(","));
            buf.push('\n');
        }
        CsvTable { buf }
    }

    pub fn row(&mut self, values: &[CsvValue]) {
        let mut first = true;
        for v in values {
            if !first {
                self.buf.push(',');
            }
            first = false;
            match v {
                CsvValue::Float(x) => {
                    let x = if *x == 0.0 { 0.0 } else { *x }; // normalize -0.0
                    self.buf.push_str(&format!("{x:.16e}"));
                }
                CsvValue::Int(i) => self.buf.push_str(&i.to_string()),
            }
        }
        self.buf.push('\n');
    }

    pub fn float_row(&mut self, values: &[f64]) {
        let cells: Vec<CsvValue> = values.iter().map(|&x| CsvValue::Float(x)).collect();
        self.row(&cells);
    }

    /// Append pre-rendered CSV content (already hash-stamped blocks).
    pub fn raw(&mut self, text: &str) {
        self.buf.push_str(text);
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf.into_bytes()
    }
}

pub enum CsvValue {
    Float(f64),
    Int(i64),
}

/// Provenance record paired with every experiment's data files.
#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub experiment: String,
    pub artifact_version: String,
    pub config_hash: String,
    /// Resolved configuration, reloadable through the normal config path.
    pub config_snapshot_toml: String,
    pub timestamp_unix_s: u64,
    pub wall_clock_s: f64,
    pub files: Vec<String>,
    pub summary: serde_json::Value,
}

impl RunRecord {
    pub fn new(experiment: &str, config_hash: &str, snapshot_toml: String) -> Self {
        RunRecord {
            experiment: experiment.to_string(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash.to_string(),
            config_snapshot_toml: snapshot_toml,
            timestamp_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            wall_clock_s: 0.0,
            files: Vec::new(),
            summary: serde_json::Value::Null,
        }
    }

    pub fn add_file(&mut self, path: &Path) {
        if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
            self.files.push(name.to_string());
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Io(format!("serialize run record: {e}")))?;
        write_atomic(dir, "run_record.json", json.as_bytes())
    }
}

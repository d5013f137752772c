//! CSV payloads, content hashes and the run manifest.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::HarnessError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SCHEMA_VERSION: u32 = 1;

/// A CSV document: optional `# `-prefixed comment lines, a header and rows.
#[derive(Clone, Debug)]
pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            comments: Vec::new(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        for c in &self.comments {
            buf.extend_from_slice(format!("# {c}\n").as_bytes());
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf);
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: &'a str,
    pub config: serde_json::Value,
    pub defaulted: &'a [String],
    /// sha256 of the compact JSON `{"command": ..., "config": ...}` with sorted keys.
    pub input_sha256: String,
    pub workers: usize,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputRecord>,
}

/// The hashed view of a run's inputs. Output directory and worker count are excluded.
pub fn input_hash(command: &str, config: &RunConfig) -> (serde_json::Value, String) {
    let value = serde_json::to_value(config).expect("config serializes");
    let hashed = serde_json::json!({ "command": command, "config": value });
    let digest = sha256_hex(&serde_json::to_vec(&hashed).expect("json value serializes"));
    (value, digest)
}

/// Writes each payload under `dir` and returns its record, in the given order.
pub fn write_outputs(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<OutputRecord>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    files
        .iter()
        .map(|(name, bytes)| {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| HarnessError::io(&path, e))?;
            Ok(OutputRecord {
                file: name.clone(),
                bytes: bytes.len() as u64,
                sha256: sha256_hex(bytes),
            })
        })
        .collect()
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<(), HarnessError> {
    let mut text = serde_json::to_vec_pretty(manifest).expect("manifest serializes");
    text.push(b'\n');
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))
}

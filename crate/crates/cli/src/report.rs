//! Run reports: the JSON envelope every subcommand (except `catalog`, which
//! emits raw objects for piping) writes to stdout.

use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// One consumed input: where it came from and a digest of its bytes.
#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub source: String,
    pub sha256: String,
}

impl InputRecord {
    pub fn new(source: &str, bytes: &[u8]) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        Self {
            source: source.to_string(),
            sha256: format!("{:x}", hasher.finalize()),
        }
    }
}

/// The stdout envelope: command, versioned provenance, the tolerances the
/// numbers were computed under, and the results payload.
#[derive(Debug, Serialize)]
pub struct RunReport<T: Serialize> {
    pub command: String,
    pub version: String,
    pub inputs: BTreeMap<String, InputRecord>,
    pub tolerances: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    pub results: T,
}

impl<T: Serialize> RunReport<T> {
    pub fn new(command: &str, results: T) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            warnings: Vec::new(),
            results,
        }
    }

    pub fn with_input(mut self, name: &str, record: InputRecord) -> Self {
        self.inputs.insert(name.to_string(), record);
        self
    }

    pub fn with_tolerance(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.to_string(), value);
        self
    }

    pub fn with_warnings(mut self, warnings: Vec<String>) -> Self {
        self.warnings = warnings;
        self
    }

    pub fn print(&self) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        println!("{text}");
        Ok(())
    }
}

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;
use crate::io::write_json;

/// Everything needed to repeat a run: with the same inputs, seeds, configs
/// and thread count the outputs are reproduced exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub command_line: Vec<String>,
    pub threads: usize,
    pub seeds: BTreeMap<String, Value>,
    pub config: Value,
    pub input_digests: BTreeMap<String, String>,
    pub timings_seconds: BTreeMap<String, f64>,
    pub extra: BTreeMap<String, Value>,
}

impl RunManifest {
    pub fn new(command: &str, threads: usize) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            command_line: std::env::args().collect(),
            threads,
            seeds: BTreeMap::new(),
            config: Value::Null,
            input_digests: BTreeMap::new(),
            timings_seconds: BTreeMap::new(),
            extra: BTreeMap::new(),
        }
    }

    pub fn seed(&mut self, name: &str, value: impl Serialize) {
        self.seeds
            .insert(name.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn extra(&mut self, name: &str, value: impl Serialize) {
        self.extra
            .insert(name.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("manifest.json"), self)
    }
}

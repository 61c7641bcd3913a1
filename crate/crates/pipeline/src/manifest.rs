//! Per-stage run manifests. A manifest lists the hash of every file a stage
//! read and wrote, plus the configuration hash and versions. No timestamps,
//! so identical runs produce identical manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::io::{self, IoError};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub stage: String,
    pub tool_version: String,
    pub template_version: String,
    pub config_sha256: String,
    pub backend: Option<String>,
    pub seed: u64,
    /// Path → sha256. Paths under the output directory are relative to it.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

/// Reads and writes files while recording their hashes for the manifest.
pub struct Tracked {
    root: PathBuf,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl Tracked {
    pub fn new(root: &Path) -> Self {
        Self { root: root.to_path_buf(), inputs: BTreeMap::new(), outputs: BTreeMap::new() }
    }

    fn rel(&self, p: &Path) -> String {
        p.strip_prefix(&self.root).unwrap_or(p).to_string_lossy().replace('\\', "/")
    }

    /// Records an input that did not come from a file, such as the bundled
    /// sample corpus.
    pub fn note_input(&mut self, name: &str, bytes: &[u8]) {
        self.inputs.insert(name.to_string(), io::sha256_hex(bytes));
    }

    pub fn read(&mut self, p: &Path) -> Result<String, IoError> {
        let text = io::read_text(p)?;
        self.inputs.insert(self.rel(p), io::sha256_hex(text.as_bytes()));
        Ok(text)
    }

    pub fn read_jsonl<T: DeserializeOwned>(&mut self, p: &Path) -> Result<Vec<T>, IoError> {
        let text = self.read(p)?;
        io::parse_jsonl(&text, p)
    }

    pub fn read_json<T: DeserializeOwned>(&mut self, p: &Path) -> Result<T, IoError> {
        let text = self.read(p)?;
        serde_json::from_str(&text).map_err(|e| IoError::Parse {
            path: p.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn write(&mut self, p: &Path, bytes: &[u8]) -> Result<(), IoError> {
        io::write_file(p, bytes)?;
        self.outputs.insert(self.rel(p), io::sha256_hex(bytes));
        Ok(())
    }

    pub fn write_jsonl<T: Serialize>(&mut self, p: &Path, items: &[T]) -> Result<(), IoError> {
        self.write(p, io::to_jsonl(items).as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, p: &Path, value: &T) -> Result<(), IoError> {
        let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
        s.push('\n');
        self.write(p, s.as_bytes())
    }

    /// Records a file written by someone else.
    pub fn note_output(&mut self, p: &Path) -> Result<(), IoError> {
        let bytes = std::fs::read(p).map_err(|source| IoError::Read { path: p.to_path_buf(), source })?;
        self.outputs.insert(self.rel(p), io::sha256_hex(&bytes));
        Ok(())
    }

    pub fn finish(
        self,
        stage: &str,
        config_sha256: &str,
        backend: Option<&str>,
        seed: u64,
        dir: &Path,
    ) -> Result<RunManifest, IoError> {
        let manifest = RunManifest {
            stage: stage.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            template_version: cultalign_core::prompt::TEMPLATE_VERSION.to_string(),
            config_sha256: config_sha256.to_string(),
            backend: backend.map(str::to_string),
            seed,
            inputs: self.inputs,
            outputs: self.outputs,
        };
        io::write_json(&dir.join(MANIFEST_FILE), &manifest)?;
        Ok(manifest)
    }
}

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qnt_core::circuit::parse_qasm;
use qnt_core::{BitString, Circuit};

use crate::Fail;

/// Bitstrings a circuit is run on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputsFile {
    pub circuit_id: String,
    pub inputs: Vec<BitString>,
}

/// One noisy execution: the counts observed for one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub input: BitString,
    pub shots: u64,
    pub counts: BTreeMap<BitString, u64>,
}

/// Provenance sidecar written next to every output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub command: String,
    pub seed: Option<u64>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

/// Tracks consumed and produced files for the run manifest.
pub struct Session {
    command: String,
    seed: Option<u64>,
    started: u64,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Session {
    pub fn new(seed: Option<u64>) -> Self {
        Self {
            command: std::env::args().collect::<Vec<_>>().join(" "),
            seed,
            started: now(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn read(&mut self, path: &Path) -> Result<String, Fail> {
        let bytes = fs::read(path).map_err(|e| Fail::usage(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.insert(path.display().to_string(), digest(&bytes));
        String::from_utf8(bytes).map_err(|_| Fail::usage(format!("{} is not UTF-8", path.display())))
    }

    pub fn read_json<T: DeserializeOwned>(&mut self, path: &Path) -> Result<T, Fail> {
        let text = self.read(path)?;
        serde_json::from_str(&text).map_err(|e| Fail::usage(format!("{}: {e}", path.display())))
    }

    pub fn read_circuit(&mut self, path: &Path) -> Result<Circuit, Fail> {
        let text = self.read(path)?;
        parse_qasm(&text).map_err(|e| Fail::usage(format!("{}: {e}", path.display())))
    }

    pub fn write(&mut self, path: &Path, contents: &[u8]) -> Result<(), Fail> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Fail::runtime(format!("cannot create {}: {e}", dir.display())))?;
        }
        fs::write(path, contents).map_err(|e| Fail::runtime(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.insert(path.display().to_string(), digest(contents));
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, path: &Path, value: &T) -> Result<(), Fail> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Fail::runtime(e.to_string()))?;
        text.push('\n');
        self.write(path, text.as_bytes())
    }

    /// Writes `<out>.manifest.json`.
    pub fn finish(self, out: &Path) -> Result<(), Fail> {
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            seed: self.seed,
            inputs: self.inputs,
            outputs: self.outputs,
            started_unix: self.started,
            finished_unix: now(),
        };
        let path = manifest_path(out);
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Fail::runtime(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| Fail::runtime(format!("cannot write {}: {e}", path.display())))
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

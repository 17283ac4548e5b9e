//! Run manifests: the exact command line, resolved parameters and SHA-256
//! checksums of every input and output, written as `manifest.json` next to
//! the outputs of a command.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub command: String,
    /// Arguments after the program name.
    pub argv: Vec<String>,
    /// Working directory the command ran in; relative paths resolve here.
    pub cwd: PathBuf,
    pub params: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

pub fn checksum(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

fn checksums(paths: &[PathBuf]) -> Result<BTreeMap<String, String>> {
    paths
        .iter()
        .map(|p| Ok((p.display().to_string(), checksum(p)?)))
        .collect()
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String], params: impl Serialize) -> Result<Self> {
        let cwd = std::env::current_dir().map_err(|e| CliError::io(".", e))?;
        Ok(Self {
            tool: format!("plsa {}", env!("CARGO_PKG_VERSION")),
            command: command.into(),
            argv: argv.to_vec(),
            cwd,
            params: serde_json::to_value(params).expect("parameters serialize"),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        })
    }

    /// Fills in checksums and writes `manifest.json` into `dir`.
    pub fn write(mut self, dir: &Path, inputs: &[PathBuf], outputs: &[PathBuf]) -> Result<PathBuf> {
        self.inputs = checksums(inputs)?;
        self.outputs = checksums(outputs)?;
        let path = dir.join(FILE_NAME);
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| CliError::Manifest {
            path: path.into(),
            source,
        })
    }

    /// Files whose current checksum differs from the recorded one, resolved
    /// against the recorded working directory.
    pub fn changed_outputs(&self) -> Result<Vec<String>> {
        let mut changed = Vec::new();
        for (name, sum) in &self.outputs {
            let path = self.cwd.join(name);
            if !path.exists() || checksum(&path)? != *sum {
                changed.push(name.clone());
            }
        }
        Ok(changed)
    }
}

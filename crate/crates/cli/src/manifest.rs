use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

pub fn digest(path: &Path) -> Result<FileDigest, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let hash = Sha256::digest(&bytes);
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: hash.iter().map(|b| format!("{b:02x}")).collect(),
    })
}

/// Record of one run, written as JSON beside its outputs.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'static str,
    pub version: &'static str,
    pub config: &'a RunConfig,
    /// Looks actually used, after falling back to the inputs.
    pub looks: f64,
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scene: Option<serde_json::Value>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl<'a> Manifest<'a> {
    pub fn new(command: &'static str, config: &'a RunConfig, looks: f64) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config,
            looks,
            seed: None,
            scene: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn inputs(mut self, paths: &[PathBuf]) -> Result<Self, CliError> {
        for p in paths {
            self.inputs.push(digest(p)?);
        }
        Ok(self)
    }

    pub fn write(mut self, outputs: &[PathBuf], path: &Path) -> Result<(), CliError> {
        for p in outputs {
            self.outputs.push(digest(p)?);
        }
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        fs::write(path, text + "\n")?;
        Ok(())
    }
}

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::train::TrainingConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub data: u64,
    pub key: u64,
    pub init: u64,
    pub channel: u64,
    pub test_data: u64,
    pub test_key: u64,
    /// Value of `ADVMOD_SEED_OVERRIDE` when it was set.
    pub overridden_by: Option<u64>,
}

impl Seeds {
    pub fn of(config: &TrainingConfig, overridden_by: Option<u64>) -> Self {
        Self {
            data: config.data_seed,
            key: config.key_seed,
            init: config.init_seed,
            channel: config.channel_seed,
            test_data: config.test_data_seed,
            test_key: config.test_key_seed,
            overridden_by,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl FileEntry {
    pub fn of(root: &Path, relative: &str) -> Result<Self> {
        let path = root.join(relative);
        let content = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            path: relative.to_string(),
            bytes: content.len() as u64,
            sha256: sha256_hex(&content),
        })
    }
}

pub fn sha256_hex(content: &[u8]) -> String {
    hex::encode(Sha256::digest(content))
}

pub fn timestamp() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Provenance for one command run: what ran, with which configuration and
/// seeds, when, and a digest of every file it wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: TrainingConfig,
    pub seeds: Seeds,
    pub started_at: String,
    pub finished_at: String,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn new(command: &str, config: &TrainingConfig, overridden_by: Option<u64>, started_at: String) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            seeds: Seeds::of(config, overridden_by),
            started_at,
            finished_at: String::new(),
            files: Vec::new(),
        }
    }

    /// Digests `written` (paths relative to `root`), stamps the finish time
    /// and writes the manifest as `root/name`.
    pub fn finish(mut self, root: &Path, name: &str, written: &[String]) -> Result<PathBuf> {
        self.files = written
            .iter()
            .map(|rel| FileEntry::of(root, rel))
            .collect::<Result<_>>()?;
        self.finished_at = timestamp();
        let path = root.join(name);
        let text = serde_json::to_string_pretty(&self)?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Files whose current content no longer matches the recorded digest.
    pub fn stale_files(&self, root: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|f| FileEntry::of(root, &f.path).map(|now| now != **f).unwrap_or(true))
            .map(|f| f.path.clone())
            .collect()
    }
}

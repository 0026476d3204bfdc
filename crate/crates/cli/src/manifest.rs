//! Run manifest: what was asked, what happened, and a digest of every file written.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub command: String,
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub threads: usize,
    pub started: String,
    pub finished: String,
    pub exit_status: i32,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_good_time: Option<f64>,
    pub audit_passed: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub config_echo: String,
    pub files: Vec<FileEntry>,
}

pub fn sha256_file(path: &Path) -> std::io::Result<(String, u64)> {
    let bytes = std::fs::read(path)?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

/// Collects the output files produced under `out` and writes the manifest.
///
/// Digests are taken once, then every file is re-read and re-hashed; the
/// manifest records whether the two passes agree.
pub struct ManifestBuilder {
    pub out: PathBuf,
    pub command: String,
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub started: chrono::DateTime<chrono::Utc>,
    pub config_echo: String,
    pub files: Vec<PathBuf>,
    pub last_good_time: Option<f64>,
}

impl ManifestBuilder {
    pub fn new(out: &Path, command: &str, seed: Option<u64>) -> Self {
        Self {
            out: out.to_path_buf(),
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            seed,
            started: chrono::Utc::now(),
            config_echo: String::new(),
            files: Vec::new(),
            last_good_time: None,
        }
    }

    pub fn add(&mut self, path: PathBuf) {
        self.files.push(path);
    }

    pub fn finish(self, exit_status: i32, message: &str) -> std::io::Result<RunManifest> {
        let mut entries = Vec::with_capacity(self.files.len());
        for f in &self.files {
            let (sha256, bytes) = sha256_file(f)?;
            let rel = f.strip_prefix(&self.out).unwrap_or(f);
            entries.push(FileEntry {
                path: rel.display().to_string(),
                sha256,
                bytes,
            });
        }
        let audit_passed = self
            .files
            .iter()
            .zip(&entries)
            .all(|(f, e)| sha256_file(f).map(|(d, _)| d == e.sha256).unwrap_or(false));
        let manifest = RunManifest {
            tool: format!("sixfilm {}", env!("CARGO_PKG_VERSION")),
            command: self.command,
            args: self.args,
            seed: self.seed,
            threads: rayon::current_num_threads(),
            started: self.started.to_rfc3339(),
            finished: chrono::Utc::now().to_rfc3339(),
            exit_status,
            message: message.to_string(),
            last_good_time: self.last_good_time,
            audit_passed,
            config_echo: self.config_echo,
            files: entries,
        };
        let text = toml::to_string(&manifest).map_err(std::io::Error::other)?;
        std::fs::create_dir_all(&self.out)?;
        std::fs::write(self.out.join(MANIFEST_FILE), text)?;
        Ok(manifest)
    }
}

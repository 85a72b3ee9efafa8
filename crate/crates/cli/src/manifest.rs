use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_FORMAT: &str = "rcsbench-manifest/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Record of one command invocation, written next to its primary output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name, config-file defaults included.
    pub args: Vec<String>,
    /// sha256 of `args` joined by NUL bytes.
    pub config_sha256: String,
    pub seeds: Vec<(String, u64)>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` when set.
    pub created_unix: u64,
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn digest(path: &Path) -> Result<FileDigest, CliError> {
    let bytes = read(path)?;
    Ok(FileDigest { path: path.display().to_string(), bytes: bytes.len() as u64, sha256: sha256_bytes(&bytes) })
}

fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.parse().ok()) {
        return t;
    }
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    primary.with_file_name(name)
}

pub struct ManifestBuilder {
    command: String,
    args: Vec<String>,
    seeds: Vec<(String, u64)>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn new(command: &str, args: &[String]) -> Self {
        Self { command: command.into(), args: args.to_vec(), seeds: Vec::new(), inputs: Vec::new(), outputs: Vec::new() }
    }

    pub fn seed(&mut self, name: &str, value: u64) -> &mut Self {
        self.seeds.push((name.into(), value));
        self
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    /// Writes the manifest next to the first output and returns its path.
    pub fn write(&self) -> Result<PathBuf, CliError> {
        let primary = self.outputs.first().ok_or_else(|| CliError::input("command produced no outputs"))?;
        let manifest = RunManifest {
            format: MANIFEST_FORMAT.into(),
            tool: "rcsbench".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.clone(),
            args: self.args.clone(),
            config_sha256: sha256_bytes(self.args.join("\0").as_bytes()),
            seeds: self.seeds.clone(),
            inputs: self.inputs.iter().map(|p| digest(p)).collect::<Result<_, _>>()?,
            outputs: self.outputs.iter().map(|p| digest(p)).collect::<Result<_, _>>()?,
            created_unix: timestamp(),
        };
        let path = manifest_path(primary);
        write_text(&path, &(serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n"))?;
        Ok(path)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliResult;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to re-run a command: its arguments, the fully resolved
/// config, the seed, and digests of inputs and outputs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub config: Value,
    pub formats: Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn file_sha256(path: &Path) -> CliResult<String> {
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}

fn digests(paths: &[PathBuf]) -> CliResult<Vec<FileDigest>> {
    paths
        .iter()
        .map(|p| {
            Ok(FileDigest {
                path: p.display().to_string(),
                sha256: file_sha256(p)?,
            })
        })
        .collect()
}

/// Collects what a command read and wrote, then writes `manifest.json` into `out`.
pub struct Recorder {
    command: String,
    args: Vec<String>,
    seed: Option<u64>,
    config: Value,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Recorder {
    pub fn new(command: &str, args: &[String], config: &impl Serialize, seed: Option<u64>) -> CliResult<Self> {
        Ok(Recorder {
            command: command.to_string(),
            args: args.to_vec(),
            seed,
            config: serde_json::to_value(config)?,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn write(self, out: &Path) -> CliResult<PathBuf> {
        let manifest = Manifest {
            tool: "ctxed",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            args: self.args,
            seed: self.seed,
            config: self.config,
            formats: serde_json::json!({
                "corpus_schema": ctxed_core::corpus::SCHEMA_VERSION,
                "checkpoint": ctxed_core::trainer::CHECKPOINT_VERSION,
            }),
            inputs: digests(&self.inputs)?,
            outputs: digests(&self.outputs)?,
        };
        let path = out.join(MANIFEST_FILE);
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(path)
    }
}

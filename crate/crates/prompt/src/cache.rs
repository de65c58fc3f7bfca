use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::PromptError;

/// Lowercase hex SHA-256 of the prompt bytes.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub prompt_sha256: String,
    pub response: String,
    pub model: String,
    pub temperature: f64,
}

/// Append-only JSONL store of model responses. Later lines win on duplicate keys.
#[derive(Debug)]
pub struct ResponseCache {
    path: Option<PathBuf>,
    entries: HashMap<(String, String, u64), CacheEntry>,
}

fn key(hash: &str, model: &str, temperature: f64) -> (String, String, u64) {
    (hash.to_string(), model.to_string(), temperature.to_bits())
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        ResponseCache {
            path: None,
            entries: HashMap::new(),
        }
    }

    /// Loads `path` if it exists; new entries are appended to it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, PromptError> {
        let path = path.as_ref().to_path_buf();
        let mut cache = ResponseCache {
            path: Some(path.clone()),
            entries: HashMap::new(),
        };
        if path.exists() {
            for entry in read_entries(&path)? {
                cache.entries.insert(key(&entry.prompt_sha256, &entry.model, entry.temperature), entry);
            }
        }
        Ok(cache)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, prompt: &str, model: &str, temperature: f64) -> Option<&str> {
        self.entries
            .get(&key(&prompt_hash(prompt), model, temperature))
            .map(|e| e.response.as_str())
    }

    pub fn insert(&mut self, prompt: &str, model: &str, temperature: f64, response: &str) -> Result<(), PromptError> {
        let entry = CacheEntry {
            prompt_sha256: prompt_hash(prompt),
            response: response.to_string(),
            model: model.to_string(),
            temperature,
        };
        if let Some(path) = &self.path {
            let mut file = OpenOptions::new().create(true).append(true).open(path)?;
            writeln!(file, "{}", serde_json::to_string(&entry)?)?;
            file.flush()?;
        }
        self.entries.insert(key(&entry.prompt_sha256, model, temperature), entry);
        Ok(())
    }
}

pub(crate) fn read_entries(path: &Path) -> Result<Vec<CacheEntry>, PromptError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line).map_err(|e| PromptError::BadCacheLine {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(entry);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_sha256_hex() {
        assert_eq!(
            prompt_hash("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn cache_persists_and_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let mut cache = ResponseCache::open(&path).unwrap();
        cache.insert("p1", "m", 0.4, "r1").unwrap();
        cache.insert("p2", "m", 0.0, "r2").unwrap();
        let again = ResponseCache::open(&path).unwrap();
        assert_eq!(again.get("p1", "m", 0.4), Some("r1"));
        assert_eq!(again.get("p1", "m", 0.0), None);
        assert_eq!(again.get("p2", "other", 0.0), None);
        assert_eq!(again.len(), 2);
    }
}

pub mod analyze;
pub mod embed;
pub mod eval;
pub mod ingest;
pub mod prompt;
pub mod train;

use std::path::{Path, PathBuf};

use serde::Serialize;

use ctxed_core::corpus::{load_corpus, Corpus, EmbeddingStore};

use crate::error::CliResult;
use crate::manifest::Recorder;

pub(crate) fn create_out(out: &Path) -> CliResult<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

pub(crate) fn load(path: &Path, split: &str, rec: &mut Recorder) -> CliResult<Corpus> {
    rec.input(path);
    Ok(load_corpus(path, split)?)
}

pub(crate) fn load_embeddings(path: &Path, rec: &mut Recorder) -> CliResult<EmbeddingStore> {
    rec.input(path);
    Ok(EmbeddingStore::read(path)?)
}

/// Pretty JSON with a trailing newline.
pub(crate) fn write_json(out: &Path, name: &str, value: &impl Serialize, rec: &mut Recorder) -> CliResult<PathBuf> {
    let path = out.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value)? + "\n")?;
    rec.output(&path);
    Ok(path)
}

pub(crate) fn write_text(out: &Path, name: &str, text: &str, rec: &mut Recorder) -> CliResult<PathBuf> {
    let path = out.join(name);
    std::fs::write(&path, text)?;
    rec.output(&path);
    Ok(path)
}

/// One compact JSON value per line.
pub(crate) fn write_jsonl<T: Serialize>(out: &Path, name: &str, rows: &[T], rec: &mut Recorder) -> CliResult<PathBuf> {
    let mut text = String::new();
    for r in rows {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    write_text(out, name, &text, rec)
}

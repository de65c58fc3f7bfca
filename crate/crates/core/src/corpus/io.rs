use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Corpus, EventMention, EventTypeVocabulary, Sentence};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u64 = 1;

/// Optional first line declaring the schema version and the type inventory.
#[derive(Debug, Serialize, Deserialize)]
struct Header {
    schema_version: u64,
    #[serde(default)]
    event_types: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    id: String,
    tokens: Vec<String>,
    #[serde(default)]
    events: Vec<EventMention>,
}

pub fn load_corpus(path: impl AsRef<Path>, split_name: &str) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_corpus(BufReader::new(file), path, split_name)
}

/// Parses JSONL from any reader; `path` is used only in error messages.
pub fn parse_corpus<R: BufRead>(reader: R, path: &Path, split_name: &str) -> Result<Corpus> {
    let mut header: Option<Header> = None;
    let mut entries = Vec::new();
    let mut seen_record = false;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let malformed = |e: serde_json::Error| Error::MalformedLine {
            path: path.to_path_buf(),
            line: lineno + 1,
            message: e.to_string(),
        };
        let value: serde_json::Value = serde_json::from_str(trimmed).map_err(malformed)?;
        if value.get("schema_version").is_some() {
            if seen_record || header.is_some() {
                return Err(Error::MalformedLine {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    message: "schema header must be the first line".into(),
                });
            }
            let h: Header = serde_json::from_value(value).map_err(malformed)?;
            if h.schema_version != SCHEMA_VERSION {
                return Err(Error::UnknownSchemaVersion(h.schema_version));
            }
            header = Some(h);
            continue;
        }
        seen_record = true;
        let rec: Record = serde_json::from_value(value).map_err(malformed)?;
        let sentence = Sentence {
            id: rec.id,
            tokens: rec.tokens,
        };
        entries.push((sentence, rec.events));
    }

    let vocab = match header.and_then(|h| h.event_types) {
        Some(types) => EventTypeVocabulary::new(types)?,
        None => {
            let mut types: Vec<String> = entries
                .iter()
                .flat_map(|(_, ms)| ms.iter().map(|m| m.type_name.clone()))
                .collect();
            types.sort();
            types.dedup();
            EventTypeVocabulary::new(types)?
        }
    };
    Corpus::new(split_name, entries, vocab)
}

/// Writes a header line carrying the vocabulary, then one record per sentence.
pub fn write_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let header = Header {
        schema_version: SCHEMA_VERSION,
        event_types: Some(corpus.vocab().event_types().to_vec()),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for (s, ms) in corpus.iter() {
        let rec = Record {
            id: s.id.clone(),
            tokens: s.tokens.clone(),
            events: ms.to_vec(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

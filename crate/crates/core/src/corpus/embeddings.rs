use std::fs;
use std::path::Path;

use indexmap::IndexMap;

use super::Corpus;
use crate::error::{Error, Result};
use crate::nn::Tensor;

const MAGIC: &[u8; 4] = b"EMB1";
const VERSION: u32 = 1;

/// Token embeddings per sentence, stored as `f32` and upcast on access.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    entries: IndexMap<String, Vec<f32>>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch("embedding dimension must be positive".into()));
        }
        Ok(EmbeddingStore {
            dim,
            entries: IndexMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts a row-major `L × dim` matrix.
    pub fn insert(&mut self, id: impl Into<String>, data: Vec<f32>) -> Result<()> {
        let id = id.into();
        if data.len() % self.dim != 0 {
            return Err(Error::DimensionMismatch(format!(
                "sentence {id}: {} values is not a multiple of dim {}",
                data.len(),
                self.dim
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("embedding of sentence {id}")));
        }
        self.entries.insert(id, data);
        Ok(())
    }

    pub fn raw(&self, id: &str) -> Option<&[f32]> {
        self.entries.get(id).map(Vec::as_slice)
    }

    pub fn rows(&self, id: &str) -> Option<usize> {
        self.entries.get(id).map(|d| d.len() / self.dim)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// `L × dim` matrix in `f64`.
    pub fn matrix(&self, id: &str) -> Result<Tensor> {
        let data = self.entries.get(id).ok_or_else(|| Error::MissingEmbeddings(id.to_string()))?;
        Tensor::matrix(data.len() / self.dim, self.dim, data.iter().map(|&v| f64::from(v)).collect())
    }

    /// Checks that every sentence of `corpus` has an `L × dim` entry with `L`
    /// equal to its token count.
    pub fn check_covers(&self, corpus: &Corpus) -> Result<()> {
        for s in corpus.sentences() {
            match self.rows(&s.id) {
                None => return Err(Error::MissingEmbeddings(s.id.clone())),
                Some(l) if l != s.len() => {
                    return Err(Error::DimensionMismatch(format!(
                        "sentence {} has {} tokens but {l} embedding rows",
                        s.id,
                        s.len()
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&u32::try_from(self.entries.len()).map_err(|_| too_large("sentence count"))?.to_le_bytes());
        for (id, data) in &self.entries {
            let rows = data.len() / self.dim;
            if rows == 0 {
                return Err(Error::DimensionMismatch(format!("sentence {id} has zero rows")));
            }
            let id_len = u16::try_from(id.len()).map_err(|_| too_large("sentence id"))?;
            out.extend_from_slice(&id_len.to_le_bytes());
            out.extend_from_slice(id.as_bytes());
            out.extend_from_slice(&(rows as u32).to_le_bytes());
            out.extend_from_slice(&(self.dim as u32).to_le_bytes());
            for v in data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != MAGIC {
            return Err(Error::BadMagic {
                expected: String::from_utf8_lossy(MAGIC).into_owned(),
                found: String::from_utf8_lossy(magic).into_owned(),
            });
        }
        let version = r.u32("version")?;
        if version != VERSION {
            return Err(Error::VersionMismatch {
                expected: VERSION,
                found: version,
            });
        }
        let count = r.u32("sentence count")? as usize;
        let mut store: Option<EmbeddingStore> = None;
        for _ in 0..count {
            let id_len = r.u16("id length")? as usize;
            let id = std::str::from_utf8(r.take(id_len, "sentence id")?)
                .map_err(|_| Error::Truncated("sentence id is not UTF-8".into()))?
                .to_string();
            let rows = r.u32("row count")? as usize;
            let dim = r.u32("dimension")? as usize;
            if rows == 0 || dim == 0 {
                return Err(Error::DimensionMismatch(format!("sentence {id} has an empty matrix")));
            }
            let store = match &mut store {
                Some(s) if s.dim != dim => {
                    return Err(Error::DimensionMismatch(format!(
                        "sentence {id} has dim {dim}, store has {}",
                        s.dim
                    )))
                }
                Some(s) => s,
                None => store.insert(EmbeddingStore::new(dim)?),
            };
            let n = rows.checked_mul(dim).ok_or_else(|| too_large("matrix"))?;
            let payload = r.take(n.checked_mul(4).ok_or_else(|| too_large("matrix"))?, "matrix payload")?;
            let data = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            store.insert(id, data)?;
        }
        if r.pos != bytes.len() {
            return Err(Error::Truncated(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        // An empty file still needs a dimension; 1 is a placeholder.
        store.map_or_else(|| EmbeddingStore::new(1), Ok)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        EmbeddingStore::from_bytes(&fs::read(path)?)
    }
}

fn too_large(what: &str) -> Error {
    Error::DimensionMismatch(format!("{what} too large for the binary format"))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Truncated(format!("file ends inside {what}"))),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }
}

//! The `.emb` embedding container.
//!
//! Layout, all integers little-endian:
//!
//! | bytes        | content                                      |
//! |--------------|----------------------------------------------|
//! | 0..4         | magic `SYNE`                                 |
//! | 4..8         | `u32` version (1)                            |
//! | 8..12        | `u32` dim                                    |
//! | 12..20       | `u64` count                                  |
//! | 20           | `u8` dtype (0 = f32)                         |
//! | 21..24       | reserved, zero                               |
//! | 24..         | `count × dim` f32, row-major                 |
//! |              | `count` ids, each `u16` length + UTF-8 bytes |
//! | last 4       | `u32` CRC-32 of everything before it         |
//!
//! Extractor id and provenance are not part of the binary layout; they live
//! in an optional JSON sidecar next to the container (`<file>.meta.json`).

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const MAGIC: &[u8; 4] = b"SYNE";
pub const VERSION: u32 = 1;
pub const DTYPE_F32: u8 = 0;
const HEADER_LEN: usize = 24;

/// Ordered, id-addressed embedding matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    pub ids: Vec<String>,
    pub matrix: Matrix,
    pub extractor_id: String,
    pub created_by: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Sidecar {
    extractor_id: String,
    created_by: String,
}

impl EmbeddingStore {
    pub fn new(ids: Vec<String>, matrix: Matrix, extractor_id: impl Into<String>, created_by: impl Into<String>) -> Result<Self> {
        let store = Self {
            ids,
            matrix,
            extractor_id: extractor_id.into(),
            created_by: created_by.into(),
        };
        store.validate()?;
        Ok(store)
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        self.matrix.row(i)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn validate(&self) -> Result<()> {
        if self.matrix.cols() == 0 {
            return Err(Error::Format("embedding dimension must be >= 1".into()));
        }
        if self.matrix.rows() != self.ids.len() {
            return Err(Error::Format(format!(
                "{} rows for {} ids",
                self.matrix.rows(),
                self.ids.len()
            )));
        }
        if !self.matrix.is_finite() {
            return Err(Error::Format("non-finite embedding value".into()));
        }
        let mut seen = HashSet::with_capacity(self.ids.len());
        for id in &self.ids {
            if id.len() > u16::MAX as usize {
                return Err(Error::Format(format!("id of {} bytes exceeds u16 length prefix", id.len())));
            }
            if !seen.insert(id.as_str()) {
                return Err(Error::Format(format!("duplicate id `{id}`")));
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let dim = u32::try_from(self.dim()).map_err(|_| Error::Format("dim exceeds u32".into()))?;
        let mut out = Vec::with_capacity(HEADER_LEN + self.matrix.data().len() * 4 + self.ids.len() * 16 + 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&dim.to_le_bytes());
        out.extend_from_slice(&(self.ids.len() as u64).to_le_bytes());
        out.push(DTYPE_F32);
        out.extend_from_slice(&[0, 0, 0]);
        for v in self.matrix.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for id in &self.ids {
            out.extend_from_slice(&(id.len() as u16).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        Ok(out)
    }

    /// Decodes a container. Metadata fields are left empty.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let fail = |msg: String| Err(Error::Format(msg));
        if bytes.len() < HEADER_LEN + 4 {
            return fail(format!("{} bytes is shorter than the header", bytes.len()));
        }
        let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(crc_bytes.try_into().unwrap());
        if &body[..4] != MAGIC {
            return fail("bad magic".into());
        }
        let version = u32::from_le_bytes(body[4..8].try_into().unwrap());
        if version != VERSION {
            return fail(format!("unsupported version {version}"));
        }
        if crc32fast::hash(body) != stored {
            return fail("checksum mismatch (truncated or corrupted)".into());
        }
        let dim = u32::from_le_bytes(body[8..12].try_into().unwrap()) as usize;
        let count = u64::from_le_bytes(body[12..20].try_into().unwrap());
        if body[20] != DTYPE_F32 {
            return fail(format!("unsupported dtype code {}", body[20]));
        }
        if body[21..24] != [0, 0, 0] {
            return fail("reserved header bytes are not zero".into());
        }
        if dim == 0 {
            return fail("dim is zero".into());
        }
        let payload = usize::try_from(count)
            .ok()
            .and_then(|c| c.checked_mul(dim))
            .and_then(|n| n.checked_mul(4))
            .filter(|n| HEADER_LEN + n <= body.len())
            .ok_or_else(|| Error::Format(format!("count {count} x dim {dim} exceeds the payload")))?;
        let count = count as usize;
        let floats_end = HEADER_LEN + payload;
        let data: Vec<f32> = body[HEADER_LEN..floats_end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();

        let mut ids = Vec::with_capacity(count);
        let mut pos = floats_end;
        for i in 0..count {
            if pos + 2 > body.len() {
                return fail(format!("id table ends before id {i}"));
            }
            let len = u16::from_le_bytes(body[pos..pos + 2].try_into().unwrap()) as usize;
            pos += 2;
            if pos + len > body.len() {
                return fail(format!("id {i} runs past the end of the file"));
            }
            let id = std::str::from_utf8(&body[pos..pos + len]).map_err(|_| Error::Format(format!("id {i} is not UTF-8")))?;
            ids.push(id.to_string());
            pos += len;
        }
        if pos != body.len() {
            return fail(format!("{} trailing bytes after the id table", body.len() - pos));
        }
        let matrix = Matrix::from_vec(count, dim, data).map_err(|e| Error::Format(e.to_string()))?;
        Self::new(ids, matrix, "", "")
    }

    pub fn sidecar_path(path: &Path) -> PathBuf {
        let mut name = path.file_name().unwrap_or_default().to_os_string();
        name.push(".meta.json");
        path.with_file_name(name)
    }
}

/// Writes the container and its metadata sidecar.
pub fn write_embeddings(store: &EmbeddingStore, path: &Path) -> Result<()> {
    let bytes = store.to_bytes()?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let side = EmbeddingStore::sidecar_path(path);
    let meta = Sidecar {
        extractor_id: store.extractor_id.clone(),
        created_by: store.created_by.clone(),
    };
    fs::write(&side, serde_json::to_vec_pretty(&meta).expect("sidecar serializes")).map_err(|e| Error::io(side, e))
}

/// Reads a container; metadata comes from the sidecar when present, else the
/// extractor id defaults to the file stem.
pub fn read_embeddings(path: &Path) -> Result<EmbeddingStore> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut store = EmbeddingStore::from_bytes(&bytes)?;
    let side = EmbeddingStore::sidecar_path(path);
    match fs::read(&side) {
        Ok(raw) => {
            let meta: Sidecar = serde_json::from_slice(&raw).map_err(|e| Error::Format(format!("{}: {e}", side.display())))?;
            store.extractor_id = meta.extractor_id;
            store.created_by = meta.created_by;
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            store.extractor_id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        }
        Err(e) => return Err(Error::io(side, e)),
    }
    Ok(store)
}

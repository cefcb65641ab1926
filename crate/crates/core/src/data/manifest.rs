use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitLabel {
    Train,
    Val,
    Test,
}

impl fmt::Display for SplitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitLabel::Train => "train",
            SplitLabel::Val => "val",
            SplitLabel::Test => "test",
        })
    }
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub id: String,
    #[serde(default)]
    pub media_path: PathBuf,
    pub split: SplitLabel,
    #[serde(default)]
    pub fv_values: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<String>,
}

impl SampleRecord {
    pub fn new(id: impl Into<String>, split: SplitLabel) -> Self {
        Self {
            id: id.into(),
            media_path: PathBuf::new(),
            split,
            fv_values: BTreeMap::new(),
            duration_s: None,
            transcript: None,
        }
    }
}

/// Parses JSON-lines manifest text. Blank lines are skipped; `origin` is used
/// in error messages.
pub fn parse_manifest(text: &str, origin: &Path) -> Result<Vec<SampleRecord>> {
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |reason: String| Error::Parse {
            path: origin.to_path_buf(),
            line: line_no,
            reason,
        };
        let record: SampleRecord = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        if record.id.is_empty() {
            return Err(parse_err("empty sample id".into()));
        }
        if let Some((name, v)) = record.fv_values.iter().find(|(_, v)| !v.is_finite()) {
            return Err(parse_err(format!("factor `{name}` has non-finite value {v}")));
        }
        if !seen.insert(record.id.clone()) {
            return Err(parse_err(format!("duplicate sample id `{}`", record.id)));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn load_manifest(path: &Path) -> Result<Vec<SampleRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text, path)
}

pub fn write_manifest(records: &[SampleRecord], path: &Path) -> Result<()> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("records serialize");
        out.push(b'\n');
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))
}

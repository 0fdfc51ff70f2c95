//! Line-delimited library files: a header line, then one record per line.
//! Floats are written as shortest round-trip decimal text, so a file read
//! back on any platform reproduces the same values.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{ActionEntry, ActionLibrary, HumanGuidedLibrary, HumanGuidedRecord, SituationLibrary, SituationRecord};
use crate::error::{Result, VarpError};
use crate::gateway::Embedder;

pub const LIBRARY_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
    kind: String,
    count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedder: Option<String>,
}

fn write_lines<'a, T: Serialize + 'a>(
    path: &Path,
    kind: &str,
    embedder: Option<String>,
    items: impl ExactSizeIterator<Item = &'a T>,
) -> Result<()> {
    let mut out = Vec::new();
    let header = Header { version: LIBRARY_FORMAT_VERSION, kind: kind.into(), count: items.len(), embedder };
    serde_json::to_writer(&mut out, &header).map_err(|e| VarpError::domain(e.to_string()))?;
    out.push(b'\n');
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(|e| VarpError::domain(e.to_string()))?;
        out.push(b'\n');
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::File::create(path)?.write_all(&out)?;
    Ok(())
}

fn read_lines<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<(Header, Vec<T>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Header = lines
        .next()
        .ok_or_else(|| VarpError::Load(format!("{}: empty file", path.display())))
        .and_then(|l| serde_json::from_str(l).map_err(|e| VarpError::Load(format!("bad header: {e}"))))?;
    if header.version != LIBRARY_FORMAT_VERSION {
        return Err(VarpError::Load(format!(
            "format version {} is not supported (expected {LIBRARY_FORMAT_VERSION})",
            header.version
        )));
    }
    if header.kind != kind {
        return Err(VarpError::Load(format!("expected a {kind} file, found {}", header.kind)));
    }
    let items = lines
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| VarpError::Load(format!("line {}: {e}", i + 2))))
        .collect::<Result<Vec<T>>>()?;
    if items.len() != header.count {
        return Err(VarpError::Load(format!(
            "header promises {} records, file has {}",
            header.count,
            items.len()
        )));
    }
    Ok((header, items))
}

impl ActionLibrary {
    pub fn persist(&self, path: &Path) -> Result<()> {
        let entries: Vec<&ActionEntry> = self.entries().collect();
        write_lines(path, "action_library", Some(self.embedder().id()), entries.into_iter())
    }

    pub fn load(path: &Path, embedder: Arc<dyn Embedder>) -> Result<Self> {
        let (header, entries) = read_lines::<ActionEntry>(path, "action_library")?;
        if let Some(id) = header.embedder.filter(|id| *id != embedder.id()) {
            return Err(VarpError::Load(format!(
                "library was embedded with {id}, current provider is {}",
                embedder.id()
            )));
        }
        let mut lib = ActionLibrary::new(embedder);
        for e in entries {
            lib.insert_loaded(e).map_err(|e| VarpError::Load(e.to_string()))?;
        }
        Ok(lib)
    }
}

impl HumanGuidedLibrary {
    pub fn persist(&self, path: &Path) -> Result<()> {
        write_lines(path, "human_guided_library", None, self.records().iter())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (_, records) = read_lines::<HumanGuidedRecord>(path, "human_guided_library")?;
        let mut lib = HumanGuidedLibrary::new();
        for r in records {
            lib.add(r).map_err(|e| VarpError::Load(e.to_string()))?;
        }
        Ok(lib)
    }
}

impl SituationLibrary {
    pub fn persist(&self, path: &Path) -> Result<()> {
        write_lines(path, "situation_library", None, self.records().iter())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (_, records) = read_lines::<SituationRecord>(path, "situation_library")?;
        let mut lib = SituationLibrary::new();
        for r in records {
            lib.append_situation(r).map_err(|e| VarpError::Load(e.to_string()))?;
        }
        Ok(lib)
    }
}

//! JSONL corpora and persisted run artifacts.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::extraction::{EntityMention, ExtractionSet};
use crate::metrics::MetricsReport;
use crate::parser::ParseDiagnostics;
use crate::schema::{Schema, TypeRef};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("format error on line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("validation error in example {id:?}: {message}")]
    Validation { id: String, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One annotated sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub text: String,
    #[serde(flatten)]
    pub gold: ExtractionSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<BTreeMap<String, serde_json::Value>>,
}

impl Example {
    pub fn new(id: impl Into<String>, text: impl Into<String>, gold: ExtractionSet) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            gold,
            meta: None,
        }
    }
}

fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut indices = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()));
    let from = indices.nth(start)?;
    let to = if end == start {
        from
    } else {
        indices.nth(end - start - 1)?
    };
    Some(&text[from..to])
}

/// Checks an example against the schema and rewrites labels to class names.
pub fn validate_example(example: &mut Example, schema: &Schema) -> Result<(), String> {
    if example.id.trim().is_empty() {
        return Err("empty id".into());
    }
    if example.text.trim().is_empty() {
        return Err("empty text".into());
    }
    let text = example.text.clone();
    let check_entity = |e: &mut EntityMention| -> Result<(), String> {
        match schema.resolve_alias(&e.entity_type) {
            Ok(TypeRef::Entity(def)) => e.entity_type = def.name.clone(),
            Ok(other) => return Err(format!("{} is not an entity type", other.name())),
            Err(_) => return Err(format!("unknown label {}", e.entity_type)),
        }
        match (e.start, e.end) {
            (None, None) => Ok(()),
            (Some(s), Some(t)) => match char_slice(&text, s, t) {
                Some(found) if found == e.text => Ok(()),
                _ => Err(format!("offsets {s}..{t} do not select {:?}", e.text)),
            },
            _ => Err(format!("entity {:?} has only one offset", e.text)),
        }
    };
    for e in &mut example.gold.entities {
        check_entity(e)?;
    }
    for r in &mut example.gold.relations {
        match schema.resolve_alias(&r.relation_type) {
            Ok(TypeRef::Relation(def)) => r.relation_type = def.name.clone(),
            Ok(other) => return Err(format!("{} is not a relation type", other.name())),
            Err(_) => return Err(format!("unknown label {}", r.relation_type)),
        }
        check_entity(&mut r.head)?;
        check_entity(&mut r.tail)?;
    }
    for ev in &mut example.gold.events {
        let def = match schema.resolve_alias(&ev.event_type) {
            Ok(TypeRef::Event(def)) => def,
            Ok(other) => return Err(format!("{} is not an event type", other.name())),
            Err(_) => return Err(format!("unknown label {}", ev.event_type)),
        };
        ev.event_type = def.name.clone();
        if let Some(s) = ev.trigger_start {
            let end = s + ev.trigger.chars().count();
            if char_slice(&text, s, end) != Some(ev.trigger.as_str()) {
                return Err(format!(
                    "trigger offset {s} does not select {:?}",
                    ev.trigger
                ));
            }
        }
        for arg in &mut ev.args {
            match def.role(&arg.role) {
                Some(role) => arg.role = role.name.clone(),
                None => return Err(format!("unknown role {} for event {}", arg.role, def.name)),
            }
        }
    }
    Ok(())
}

/// Reads a JSONL split, validating every example against the schema.
pub fn load_split(path: &Path, schema: &Schema) -> Result<Vec<Example>, DatasetError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut example: Example =
            serde_json::from_str(&line).map_err(|e| DatasetError::Format {
                line: n + 1,
                message: e.to_string(),
            })?;
        validate_example(&mut example, schema).map_err(|message| DatasetError::Validation {
            id: example.id.clone(),
            message,
        })?;
        if !ids.insert(example.id.clone()) {
            return Err(DatasetError::Validation {
                id: example.id,
                message: "duplicate id".into(),
            });
        }
        out.push(example);
    }
    Ok(out)
}

pub fn save_split(examples: &[Example], path: &Path) -> Result<(), DatasetError> {
    let mut buf = String::new();
    for ex in examples {
        buf.push_str(&serde_json::to_string(ex).expect("example serializes"));
        buf.push('\n');
    }
    fs::write(path, buf).map_err(io_err(path))
}

/// Hex SHA-256 digest.
pub fn content_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub stage: String,
    pub prompt_hash: String,
    pub token_estimate: usize,
    pub example_ids: Vec<String>,
    /// Content hash of the raw response; the text lives in `responses/`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stage1_types: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub example_id: String,
    pub prompts: Vec<PromptRecord>,
    pub predictions: ExtractionSet,
    pub parse: ParseDiagnostics,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config: serde_json::Value,
    pub records: Vec<ExampleRecord>,
    pub metrics: MetricsReport,
    /// Raw responses keyed by content hash, written beside the manifest.
    #[serde(skip)]
    pub responses: BTreeMap<String, String>,
}

fn write_if_changed(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    if fs::read(path).ok().as_deref() == Some(bytes) {
        return Ok(());
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(bytes).map_err(io_err(path))
}

/// Writes `<root>/<run_id>/manifest.json` and `responses/<hash>.txt`.
/// Saving an identical manifest again leaves every file untouched.
pub fn save_run(manifest: &RunManifest, root: &Path) -> Result<PathBuf, DatasetError> {
    let dir = root.join(&manifest.run_id);
    let responses = dir.join("responses");
    fs::create_dir_all(&responses).map_err(io_err(&responses))?;
    let mut json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    json.push('\n');
    write_if_changed(&dir.join("manifest.json"), json.as_bytes())?;
    for (hash, text) in &manifest.responses {
        write_if_changed(&responses.join(format!("{hash}.txt")), text.as_bytes())?;
    }
    Ok(dir)
}

pub fn load_run(dir: &Path) -> Result<RunManifest, DatasetError> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let mut manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| DatasetError::Format {
            line: e.line(),
            message: e.to_string(),
        })?;
    let responses = dir.join("responses");
    if let Ok(entries) = fs::read_dir(&responses) {
        for entry in entries.flatten() {
            let p = entry.path();
            if let (Some(stem), Ok(text)) = (
                p.file_stem().and_then(|s| s.to_str()),
                fs::read_to_string(&p),
            ) {
                manifest.responses.insert(stem.to_string(), text);
            }
        }
    }
    Ok(manifest)
}

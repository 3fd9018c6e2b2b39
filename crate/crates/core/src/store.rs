//! Line-delimited JSON persistence for cases, with a manifest sidecar.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeSequence, Graph, OrderKind};
use crate::prompting::{self, PromptStyle};
use crate::solvers;
use crate::task::{GoldAnswer, InstanceMeta, Query, TaskInstance, TaskKind};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One ordered, rendered graph case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub id: String,
    pub task: TaskKind,
    pub order: OrderKind,
    pub style: PromptStyle,
    /// Seed the edge sequence was drawn with.
    pub seed: u64,
    pub graph: Graph,
    pub query: Query,
    pub edge_sequence: Vec<Edge>,
    pub description: String,
    pub question: String,
    pub gold: GoldAnswer,
    #[serde(default)]
    pub meta: InstanceMeta,
}

impl CaseRecord {
    pub fn instance(&self) -> TaskInstance {
        TaskInstance {
            task: self.task,
            graph: self.graph.clone(),
            query: self.query.clone(),
            gold: self.gold.clone(),
            meta: self.meta.clone(),
        }
    }

    pub fn sequence(&self) -> EdgeSequence {
        EdgeSequence { order: self.order, edges: self.edge_sequence.clone() }
    }

    /// Check the stored invariants. `strict` also re-renders the description.
    pub fn validate(&self, strict: bool) -> Result<()> {
        let corrupt = |reason: String| Error::CorruptCase { id: self.id.clone(), reason };
        let rendered = prompting::encode_graph(&self.graph, &self.sequence(), self.task)
            .map_err(|e| corrupt(e.to_string()))?;
        if strict && rendered != self.description {
            return Err(corrupt("description does not match graph and edge sequence".into()));
        }
        match solvers::check_gold(&self.instance()) {
            Ok(true) => Ok(()),
            Ok(false) => Err(corrupt("gold answer does not validate".into())),
            Err(e) => Err(corrupt(format!("gold answer: {e}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestCount {
    pub task: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<OrderKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub style: Option<PromptStyle>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global_seed: Option<u64>,
    /// Configuration the records were generated from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation: Option<Value>,
    pub total: usize,
    pub distinct_graphs: usize,
    pub counts: Vec<ManifestCount>,
}

/// Provenance written into a manifest.
#[derive(Debug, Clone, Default)]
pub struct ManifestInfo {
    pub global_seed: Option<u64>,
    pub generation: Option<Value>,
}

impl DatasetManifest {
    fn new(info: &ManifestInfo, counts: Vec<ManifestCount>, distinct_graphs: usize) -> Self {
        DatasetManifest {
            version: TOOLKIT_VERSION.to_string(),
            global_seed: info.global_seed,
            generation: info.generation.clone(),
            total: counts.iter().map(|c| c.count).sum(),
            distinct_graphs,
            counts,
        }
    }

    pub fn count(&self, task: TaskKind, order: Option<OrderKind>, style: Option<PromptStyle>) -> usize {
        self.counts
            .iter()
            .filter(|c| c.task == task && c.order == order && c.style == style)
            .map(|c| c.count)
            .sum()
    }
}

pub fn manifest_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.manifest.json"))
}

/// Write `items` one JSON object per line. The file is written to a
/// temporary sibling and renamed into place.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let werr = |source| Error::WriteError { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(werr)?;
    }
    let tmp = path.with_extension("tmp");
    let mut w = BufWriter::new(File::create(&tmp).map_err(werr)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(werr)?;
    }
    w.into_inner().map_err(|e| werr(e.into_error()))?.sync_all().map_err(werr)?;
    fs::rename(&tmp, path).map_err(werr)
}

/// Read a JSON-lines file; blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::ParseError {
            path: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|source| Error::WriteError { path: path.to_path_buf(), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::ParseError {
        path: path.to_path_buf(),
        line: e.line(),
        reason: e.to_string(),
    })
}

/// Persist cases and their manifest sidecar (`<stem>.manifest.json`).
pub fn write_cases(path: &Path, records: &[CaseRecord], info: &ManifestInfo) -> Result<DatasetManifest> {
    write_jsonl(path, records)?;
    let mut tally: BTreeMap<(TaskKind, OrderKind, PromptStyle), usize> = BTreeMap::new();
    for r in records {
        *tally.entry((r.task, r.order, r.style)).or_default() += 1;
    }
    let counts = tally
        .into_iter()
        .map(|((task, order, style), count)| ManifestCount { task, order: Some(order), style: Some(style), count })
        .collect();
    let distinct = records.iter().map(|r| r.graph.fingerprint()).collect::<BTreeSet<_>>().len();
    let manifest = DatasetManifest::new(info, counts, distinct);
    write_json(&manifest_path(path), &manifest)?;
    Ok(manifest)
}

/// Load cases and check each against its invariants.
pub fn read_cases(path: &Path, strict: bool) -> Result<Vec<CaseRecord>> {
    let records: Vec<CaseRecord> = read_jsonl(path)?;
    for r in &records {
        r.validate(strict)?;
    }
    Ok(records)
}

/// A generated instance before ordering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: String,
    pub seed: u64,
    pub instance: TaskInstance,
}

pub fn write_instances(path: &Path, records: &[InstanceRecord], info: &ManifestInfo) -> Result<DatasetManifest> {
    write_jsonl(path, records)?;
    let mut tally: BTreeMap<TaskKind, usize> = BTreeMap::new();
    for r in records {
        *tally.entry(r.instance.task).or_default() += 1;
    }
    let counts =
        tally.into_iter().map(|(task, count)| ManifestCount { task, order: None, style: None, count }).collect();
    let distinct = records.iter().map(|r| r.instance.graph.fingerprint()).collect::<BTreeSet<_>>().len();
    let manifest = DatasetManifest::new(info, counts, distinct);
    write_json(&manifest_path(path), &manifest)?;
    Ok(manifest)
}

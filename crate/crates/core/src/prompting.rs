//! Graph descriptions, task questions and prompt assembly.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{canonical_multiset, Edge, EdgeSequence, Graph, NodeId};
use crate::task::{TaskInstance, TaskKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStyle {
    ZeroShot,
    ZeroShotCot,
    FewShot,
    Cot,
    CotBag,
}

impl PromptStyle {
    pub const ALL: [PromptStyle; 5] =
        [PromptStyle::ZeroShot, PromptStyle::ZeroShotCot, PromptStyle::FewShot, PromptStyle::Cot, PromptStyle::CotBag];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptStyle::ZeroShot => "zero_shot",
            PromptStyle::ZeroShotCot => "zero_shot_cot",
            PromptStyle::FewShot => "few_shot",
            PromptStyle::Cot => "cot",
            PromptStyle::CotBag => "cot_bag",
        }
    }

    pub fn needs_exemplars(self) -> bool {
        matches!(self, PromptStyle::FewShot | PromptStyle::Cot | PromptStyle::CotBag)
    }
}

impl fmt::Display for PromptStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PromptStyle::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown prompt style {s:?}")))
    }
}

pub const STEP_BY_STEP: &str = "Let's think step by step.";
pub const BUILD_GRAPH_FIRST: &str = "Let's construct a graph with the nodes and edges first";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub description: String,
    pub question: String,
    /// Short answer used by few-shot prompts.
    pub answer: String,
    /// Worked answer used by chain-of-thought prompts; falls back to `answer`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
}

impl Exemplar {
    pub fn answer_for(&self, style: PromptStyle) -> &str {
        match style {
            PromptStyle::Cot | PromptStyle::CotBag => self.reasoning.as_deref().unwrap_or(&self.answer),
            _ => &self.answer,
        }
    }
}

/// Worked exemplars per task, stored as TOML (`[[task_name]]` tables).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExemplarBank {
    pub tasks: BTreeMap<TaskKind, Vec<Exemplar>>,
}

const BUILTIN_EXEMPLARS: &str = include_str!("../data/exemplars.toml");

impl ExemplarBank {
    pub fn builtin() -> Self {
        Self::from_toml(BUILTIN_EXEMPLARS).expect("bundled exemplar bank parses")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let bank: ExemplarBank = toml::from_str(text).map_err(|e| Error::ExemplarBank(e.to_string()))?;
        for (task, list) in &bank.tasks {
            if list.iter().any(|e| e.answer.trim().is_empty()) {
                return Err(Error::ExemplarBank(format!("{task}: exemplar with empty answer")));
            }
        }
        Ok(bank)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, task: TaskKind) -> &[Exemplar] {
        self.tasks.get(&task).map_or(&[], Vec::as_slice)
    }
}

fn tuple(e: &Edge) -> String {
    match e.weight {
        Some(w) => format!("({}, {}, {})", e.u, e.v, w),
        None => format!("({}, {})", e.u, e.v),
    }
}

fn edge_list(seq: &EdgeSequence) -> String {
    let items: Vec<String> = seq.edges.iter().map(tuple).collect();
    format!("[{}]", items.join(", "))
}

/// Render the graph in adjacency format, edges listed in sequence order.
pub fn encode_graph(g: &Graph, seq: &EdgeSequence, task: TaskKind) -> Result<String> {
    if canonical_multiset(&seq.edges, g.is_directed()) != canonical_multiset(g.edges(), g.is_directed()) {
        return Err(Error::TemplateMismatch("edge sequence is not a permutation of the graph's edges".into()));
    }
    if seq.edges.iter().zip(seq.edges.iter().map(|e| g.edge_between(e.u, e.v))).any(|(e, s)| s.map(|s| s.weight) != Some(e.weight)) {
        return Err(Error::TemplateMismatch("edge weights differ from the graph".into()));
    }

    if task == TaskKind::NodeClassification {
        let labels = g.labels().ok_or_else(|| Error::TemplateMismatch("node classification needs labels".into()))?;
        let mut seen = HashSet::new();
        let mut order: Vec<NodeId> = Vec::with_capacity(g.node_count());
        for e in &seq.edges {
            for n in [e.u, e.v] {
                if seen.insert(n) {
                    order.push(n);
                }
            }
        }
        order.extend(g.nodes().iter().filter(|n| !seen.contains(n)));
        let mut mapping = Vec::with_capacity(order.len());
        for n in order {
            let label = labels.get(&n).ok_or_else(|| Error::TemplateMismatch(format!("node {n} has no label")))?;
            mapping.push(format!("node {n}: label {label}"));
        }
        return Ok(format!("Adjacency list: {}\nNode to label mapping: {}", edge_list(seq), mapping.join(" | ")));
    }

    if task.is_weighted() != g.is_weighted() {
        return Err(Error::TemplateMismatch(format!(
            "{task} expects a {} graph",
            if task.is_weighted() { "weighted" } else { "unweighted" }
        )));
    }
    let kind = if g.is_directed() { "a directed" } else { "an undirected" };
    Ok(if g.is_weighted() {
        format!(
            "In {kind} graph, (i, j, w) means that node i and node j are connected by an edge with weight w, and the edges are: {}.",
            edge_list(seq)
        )
    } else {
        format!(
            "In {kind} graph, (i, j) means that node i and node j are connected with an edge, and the edges are: {}.",
            edge_list(seq)
        )
    })
}

pub fn make_question(inst: &TaskInstance) -> String {
    let (u, v) = inst.pair().map_or((String::new(), String::new()), |(u, v)| (u.to_string(), v.to_string()));
    match inst.task {
        TaskKind::Connectivity => format!(
            "Determine if there is a path between two nodes in the graph. Is there a path between node {u} and node {v}?"
        ),
        TaskKind::Cycle => "Is there a cycle in this graph?".into(),
        TaskKind::HamiltonPath => "Is there a path in this graph that visits every node exactly once? If yes, give the path. Note that in a path, adjacent nodes must be connected with edges.".into(),
        TaskKind::ShortestPath => format!("Give the shortest path from node {u} to node {v}."),
        TaskKind::TopoSort => "Give any topological sorting of the graph.".into(),
        TaskKind::NodeClassification => "What is the label of the node labeled '?'?".into(),
    }
}

/// Assemble the full prompt in the given style.
///
/// Every block has the shape `Graph: ..\nQuestion: ..\nAnswer:`; exemplar
/// blocks carry their answer and are separated by a blank line.
pub fn build_prompt(style: PromptStyle, description: &str, question: &str, exemplars: &[Exemplar]) -> Result<String> {
    if style.needs_exemplars() && exemplars.is_empty() {
        return Err(Error::ExemplarsRequired(style.to_string()));
    }
    let mut out = String::new();
    if style.needs_exemplars() {
        for ex in exemplars {
            out.push_str(&format!(
                "Graph: {}\nQuestion: {}\nAnswer: {}\n\n",
                ex.description,
                ex.question,
                ex.answer_for(style)
            ));
        }
    }
    match style {
        PromptStyle::ZeroShotCot => {
            out.push_str(&format!("Graph: {description}\nQuestion: {question} {STEP_BY_STEP}\nAnswer:"))
        }
        PromptStyle::CotBag => {
            out.push_str(&format!("Graph: {description}\nQuestion: {question}\n{BUILD_GRAPH_FIRST}\nAnswer:"))
        }
        _ => out.push_str(&format!("Graph: {description}\nQuestion: {question}\nAnswer:")),
    }
    Ok(out)
}

//! Task kinds, query context and gold answers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Connectivity,
    Cycle,
    HamiltonPath,
    ShortestPath,
    TopoSort,
    NodeClassification,
}

impl TaskKind {
    pub const ALL: [TaskKind; 6] = [
        TaskKind::Connectivity,
        TaskKind::Cycle,
        TaskKind::HamiltonPath,
        TaskKind::ShortestPath,
        TaskKind::TopoSort,
        TaskKind::NodeClassification,
    ];

    /// Tasks whose graphs come from the random generator.
    pub const GENERATED: [TaskKind; 5] = [
        TaskKind::Connectivity,
        TaskKind::Cycle,
        TaskKind::HamiltonPath,
        TaskKind::ShortestPath,
        TaskKind::TopoSort,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Connectivity => "connectivity",
            TaskKind::Cycle => "cycle",
            TaskKind::HamiltonPath => "hamilton_path",
            TaskKind::ShortestPath => "shortest_path",
            TaskKind::TopoSort => "topo_sort",
            TaskKind::NodeClassification => "node_classification",
        }
    }

    pub fn is_directed(self) -> bool {
        self == TaskKind::TopoSort
    }

    pub fn is_weighted(self) -> bool {
        self == TaskKind::ShortestPath
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskKind::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown task {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Query {
    None,
    Pair { source: NodeId, target: NodeId },
    Node { node: NodeId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GoldAnswer {
    YesNo { value: bool },
    Path {
        nodes: Vec<NodeId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weight: Option<u64>,
    },
    Order { nodes: Vec<NodeId> },
    Label { label: String },
}

/// Provenance and witness choices recorded alongside an instance.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMeta {
    /// Cycle found for the cycle task; drives its personalization vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<Vec<NodeId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub task: TaskKind,
    pub graph: Graph,
    pub query: Query,
    pub gold: GoldAnswer,
    #[serde(default)]
    pub meta: InstanceMeta,
}

impl TaskInstance {
    pub fn pair(&self) -> Option<(NodeId, NodeId)> {
        match self.query {
            Query::Pair { source, target } => Some((source, target)),
            _ => None,
        }
    }

    pub fn query_node(&self) -> Option<NodeId> {
        match self.query {
            Query::Node { node } => Some(node),
            _ => None,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

use crate::graph::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node {0} is not in the graph")]
    NodeNotFound(NodeId),
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no valid instance for {task} after {tries} tries")]
    GenerationExhausted { task: String, tries: usize },
    #[error("no node has a labeled neighbor to infer from")]
    NoEligibleQueryNode,
    #[error("failed to load graph from {path}: {reason}")]
    Load { path: PathBuf, reason: String },

    #[error("rank iteration did not converge in {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },
    #[error("missing witness: {0}")]
    MissingWitness(String),
    #[error("no score for node {0}")]
    MissingScore(NodeId),
    #[error("invalid witness path: {0}")]
    InvalidWitness(String),
    #[error("order {order} is not defined for task {task}")]
    OrderNotApplicable { order: String, task: String },

    #[error("no path between {0} and {1}")]
    NoPath(NodeId, NodeId),
    #[error("graph contains a directed cycle")]
    NotADag,
    #[error("answer shape does not match task {0}")]
    AnswerShapeMismatch(String),

    #[error("template does not fit graph: {0}")]
    TemplateMismatch(String),
    #[error("prompt style {0} needs at least one exemplar")]
    ExemplarsRequired(String),
    #[error("invalid exemplar bank: {0}")]
    ExemplarBank(String),

    #[error("empty input")]
    EmptyInput,
    #[error("variance needs at least two orders, got {0}")]
    InsufficientOrders(usize),
    #[error("baseline must be positive, got {0}")]
    InvalidBaseline(f64),

    #[error("endpoint rejected credentials (HTTP {status})")]
    AuthError { status: u16 },
    #[error("endpoint unavailable after {attempts} attempts: {reason}")]
    EndpointUnavailable { attempts: u32, reason: String },
    #[error("prompt too large: {len} bytes (limit {limit})")]
    PromptTooLarge { len: usize, limit: usize },
    #[error("empty prompt")]
    EmptyPrompt,
    #[error("malformed endpoint response: {0}")]
    BadResponse(String),

    #[error("failed to write {path}: {source}")]
    WriteError {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    ParseError {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("corrupt case {id}: {reason}")]
    CorruptCase { id: String, reason: String },
    #[error("stage {stage} needs {missing}")]
    StageDependency { stage: String, missing: PathBuf },

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

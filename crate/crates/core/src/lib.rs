//! Graph reasoning benchmark toolkit: graph generation, edge orderings,
//! prompt encoding, model access and scoring.

pub mod error;
pub mod evaluation;
pub mod gateway;
pub mod gen;
pub mod graph;
pub mod ordering;
pub mod pipeline;
pub mod prompting;
pub mod ranking;
pub mod solvers;
pub mod store;
pub mod task;

pub use error::{Error, Result};
pub use graph::{Edge, EdgeSequence, Graph, NodeId, OrderKind};
pub use task::{GoldAnswer, InstanceMeta, Query, TaskInstance, TaskKind};

//! PageRank and personalized PageRank over the unnormalized recurrence
//!
//! ```text
//! PR(v) = alpha * sum_{u -> v} PR(u) / |N(u)| + (1 - alpha) * e_v
//! ```
//!
//! with `e_v = 1` for plain PageRank. Undirected edges count in both
//! directions, edge weights are ignored, and a node without out-edges
//! passes nothing on. Iteration is synchronous from the all-ones vector.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::solvers;
use crate::task::{GoldAnswer, TaskInstance, TaskKind};

pub const DEFAULT_ALPHA: f64 = 0.85;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankConfig {
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig { alpha: DEFAULT_ALPHA, tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankScores {
    pub scores: BTreeMap<NodeId, f64>,
    pub alpha: f64,
    /// Largest per-node change in the final iteration.
    pub residual: f64,
    pub iterations: usize,
}

impl RankScores {
    pub fn get(&self, n: NodeId) -> Option<f64> {
        self.scores.get(&n).copied()
    }

    /// Sort key: descending score, then ascending id. Scores are quantized
    /// to 1e-9 so that symmetric nodes differing only by rounding noise tie.
    pub fn rank_key(&self, n: NodeId) -> Option<(std::cmp::Reverse<i64>, NodeId)> {
        self.get(n).map(|s| (std::cmp::Reverse((s * 1e9).round() as i64), n))
    }

    /// Nodes by descending score, ties by ascending id.
    pub fn ranked(&self) -> Vec<NodeId> {
        let mut nodes: Vec<NodeId> = self.scores.keys().copied().collect();
        nodes.sort_by_key(|&n| self.rank_key(n));
        nodes
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonalizationVector {
    pub task: TaskKind,
    pub weights: BTreeMap<NodeId, f64>,
}

impl PersonalizationVector {
    pub fn get(&self, n: NodeId) -> f64 {
        self.weights.get(&n).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }
}

pub fn pagerank(g: &Graph, cfg: RankConfig) -> Result<RankScores> {
    iterate(g, &vec![1.0; g.node_count()], cfg)
}

pub fn personalized_pagerank(g: &Graph, e: &PersonalizationVector, cfg: RankConfig) -> Result<RankScores> {
    let restart: Vec<f64> = g.nodes().iter().map(|&n| e.get(n)).collect();
    iterate(g, &restart, cfg)
}

/// One application of the recurrence.
pub fn apply_recurrence(g: &Graph, current: &[f64], restart: &[f64], alpha: f64) -> Vec<f64> {
    (0..g.node_count())
        .map(|v| {
            let inflow: f64 = g
                .in_indices(v)
                .iter()
                .map(|&u| current[u] / g.out_degree(u) as f64)
                .sum();
            alpha * inflow + (1.0 - alpha) * restart[v]
        })
        .collect()
}

fn iterate(g: &Graph, restart: &[f64], cfg: RankConfig) -> Result<RankScores> {
    if g.node_count() == 0 {
        return Err(Error::InvalidGraph("rank of an empty graph".into()));
    }
    if !(0.0..1.0).contains(&cfg.alpha) {
        return Err(Error::InvalidConfig(format!("damping factor {} outside [0, 1)", cfg.alpha)));
    }
    let mut scores = vec![1.0; g.node_count()];
    let mut residual = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        let next = apply_recurrence(g, &scores, restart, cfg.alpha);
        residual = next.iter().zip(&scores).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        scores = next;
        if residual < cfg.tol {
            return Ok(RankScores {
                scores: g.nodes().iter().copied().zip(scores).collect(),
                alpha: cfg.alpha,
                residual,
                iterations: it,
            });
        }
    }
    Err(Error::ConvergenceFailure { iterations: cfg.max_iter, residual })
}

fn uniform_over(task: TaskKind, nodes: impl IntoIterator<Item = NodeId>) -> PersonalizationVector {
    let set: std::collections::BTreeSet<NodeId> = nodes.into_iter().collect();
    let share = 1.0 / set.len() as f64;
    PersonalizationVector { task, weights: set.into_iter().map(|n| (n, share)).collect() }
}

/// Task-specific restart distribution for the personalized order.
///
/// * connectivity: 0.5 on each query node
/// * cycle: uniform over the recorded cycle, or over all nodes when acyclic
/// * Hamilton path / shortest path: uniform over the gold path's nodes
/// * topological sort: uniform over in-degree-0 nodes
/// * node classification: `(D - d(v) + 1) / sum_u (D - d(u) + 1)`, with `d`
///   the hop distance from the query node and `D` the largest finite one.
///   Unreachable nodes get zero weight.
pub fn build_personalization(inst: &TaskInstance) -> Result<PersonalizationVector> {
    let g = &inst.graph;
    let task = inst.task;
    let missing = |what: &str| Error::MissingWitness(format!("{task} needs {what}"));
    let pv = match task {
        TaskKind::Connectivity => {
            let (u, v) = inst.pair().ok_or_else(|| missing("a query pair"))?;
            let mut weights: BTreeMap<NodeId, f64> = g.nodes().iter().map(|&n| (n, 0.0)).collect();
            *weights.entry(u).or_default() += 0.5;
            *weights.entry(v).or_default() += 0.5;
            PersonalizationVector { task, weights }
        }
        TaskKind::Cycle => match (&inst.gold, &inst.meta.cycle) {
            (_, Some(cycle)) if !cycle.is_empty() => uniform_over(task, cycle.iter().copied()),
            (GoldAnswer::YesNo { value: true }, _) => return Err(missing("the cycle witness")),
            _ => uniform_over(task, g.nodes().iter().copied()),
        },
        TaskKind::HamiltonPath | TaskKind::ShortestPath => match &inst.gold {
            GoldAnswer::Path { nodes, .. } if !nodes.is_empty() => uniform_over(task, nodes.iter().copied()),
            _ => return Err(missing("a path witness")),
        },
        TaskKind::TopoSort => {
            let roots = solvers::sources(g);
            if roots.is_empty() {
                return Err(missing("a node with in-degree 0"));
            }
            uniform_over(task, roots)
        }
        TaskKind::NodeClassification => {
            let v0 = inst.query_node().ok_or_else(|| missing("a query node"))?;
            let dist = g.hop_distances(v0)?;
            let max = dist.iter().flatten().copied().max().unwrap_or(0);
            let raw: Vec<f64> = dist.iter().map(|d| d.map_or(0.0, |d| (max - d + 1) as f64)).collect();
            let total: f64 = raw.iter().sum();
            PersonalizationVector {
                task,
                weights: g.nodes().iter().copied().zip(raw.into_iter().map(|w| w / total)).collect(),
            }
        }
    };
    Ok(pv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::{InstanceMeta, Query};

    fn inst(task: TaskKind, graph: Graph, query: Query, gold: GoldAnswer) -> TaskInstance {
        TaskInstance { task, graph, query, gold, meta: InstanceMeta::default() }
    }

    #[test]
    fn triangle_is_all_ones() {
        let g = Graph::undirected(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let r = pagerank(&g, RankConfig::default()).unwrap();
        for s in r.scores.values() {
            assert!((s - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn isolated_node_keeps_teleport_mass() {
        let g = Graph::undirected(1, &[]).unwrap();
        let r = pagerank(&g, RankConfig::default()).unwrap();
        assert!((r.get(NodeId(0)).unwrap() - 0.15).abs() < 1e-12);
    }

    #[test]
    fn path_closed_form() {
        // x = 0.85 * y / 2 + 0.15, y = 0.85 * 2x + 0.15
        // => x = 0.21375 / 0.2775, y = 1.7x + 0.15
        let x = 0.21375 / 0.2775;
        let y = 1.7 * x + 0.15;
        let g = Graph::undirected(3, &[(0, 1), (1, 2)]).unwrap();
        let r = pagerank(&g, RankConfig::default()).unwrap();
        assert!((r.get(NodeId(0)).unwrap() - x).abs() < 1e-8);
        assert!((r.get(NodeId(1)).unwrap() - y).abs() < 1e-8);
        assert!((r.get(NodeId(0)).unwrap() - 0.7703).abs() < 1e-3);
        assert!((r.get(NodeId(1)).unwrap() - 1.4595).abs() < 1e-3);
        assert_eq!(r.ranked(), vec![NodeId(1), NodeId(0), NodeId(2)]);
    }

    #[test]
    fn dangling_nodes_pass_nothing() {
        let g = Graph::directed(2, &[(0, 1)]).unwrap();
        let r = pagerank(&g, RankConfig::default()).unwrap();
        assert!((r.get(NodeId(0)).unwrap() - 0.15).abs() < 1e-12);
        assert!((r.get(NodeId(1)).unwrap() - (0.85 * 0.15 + 0.15)).abs() < 1e-12);
    }

    #[test]
    fn convergence_failure_reports_residual() {
        let g = Graph::undirected(3, &[(0, 1), (1, 2)]).unwrap();
        let cfg = RankConfig { max_iter: 2, ..RankConfig::default() };
        match pagerank(&g, cfg) {
            Err(Error::ConvergenceFailure { iterations: 2, residual }) => assert!(residual > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ppr_isolated_and_symmetric() {
        let g = Graph::undirected(3, &[(0, 1)]).unwrap();
        let e = PersonalizationVector { task: TaskKind::Cycle, weights: [(NodeId(2), 1.0)].into() };
        let r = personalized_pagerank(&g, &e, RankConfig::default()).unwrap();
        assert!((r.get(NodeId(2)).unwrap() - 0.15).abs() < 1e-12);
        assert!(r.get(NodeId(0)).unwrap().abs() < 1e-8);
        assert!(r.get(NodeId(1)).unwrap().abs() < 1e-8);

        let tri = Graph::undirected(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let e = uniform_over(TaskKind::Cycle, tri.nodes().iter().copied());
        let r = personalized_pagerank(&tri, &e, RankConfig::default()).unwrap();
        let v: Vec<f64> = r.scores.values().copied().collect();
        assert!((v[0] - v[1]).abs() < 1e-12 && (v[1] - v[2]).abs() < 1e-12);
    }

    #[test]
    fn ppr_favors_restart_side() {
        let g = Graph::undirected(3, &[(0, 1), (1, 2)]).unwrap();
        let e = PersonalizationVector { task: TaskKind::Cycle, weights: [(NodeId(0), 1.0)].into() };
        let r = personalized_pagerank(&g, &e, RankConfig::default()).unwrap();
        assert!(r.get(NodeId(0)).unwrap() > r.get(NodeId(2)).unwrap());
    }

    #[test]
    fn connectivity_vector() {
        let g = Graph::undirected(4, &[(0, 1), (2, 3)]).unwrap();
        let i = inst(
            TaskKind::Connectivity,
            g,
            Query::Pair { source: NodeId(0), target: NodeId(3) },
            GoldAnswer::YesNo { value: false },
        );
        let pv = build_personalization(&i).unwrap();
        assert_eq!(pv.get(NodeId(0)), 0.5);
        assert_eq!(pv.get(NodeId(3)), 0.5);
        assert_eq!(pv.get(NodeId(1)), 0.0);
        assert!((pv.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cycle_vector_and_fallback() {
        let tree = Graph::undirected(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let i = inst(TaskKind::Cycle, tree, Query::None, GoldAnswer::YesNo { value: false });
        let pv = build_personalization(&i).unwrap();
        assert!(pv.weights.values().all(|&w| w == 0.25));

        let g = Graph::undirected(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)]).unwrap();
        let mut i = inst(TaskKind::Cycle, g, Query::None, GoldAnswer::YesNo { value: true });
        assert!(matches!(build_personalization(&i), Err(Error::MissingWitness(_))));
        i.meta.cycle = solvers::find_cycle(&i.graph);
        let pv = build_personalization(&i).unwrap();
        for n in 0..3 {
            assert!((pv.get(NodeId(n)) - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(pv.get(NodeId(4)), 0.0);
    }

    #[test]
    fn node_classification_star() {
        // center 0 is the query; D = 1, so center gets 2/5 and each leaf 1/5
        let g = Graph::undirected(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let i = inst(
            TaskKind::NodeClassification,
            g,
            Query::Node { node: NodeId(0) },
            GoldAnswer::Label { label: "1".into() },
        );
        let pv = build_personalization(&i).unwrap();
        assert!((pv.get(NodeId(0)) - 0.4).abs() < 1e-15);
        for n in 1..4 {
            assert!((pv.get(NodeId(n)) - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn path_vectors_need_witness() {
        let g = Graph::undirected(3, &[(0, 1), (1, 2)]).unwrap();
        let i = inst(TaskKind::HamiltonPath, g, Query::None, GoldAnswer::YesNo { value: true });
        assert!(matches!(build_personalization(&i), Err(Error::MissingWitness(_))));
    }
}

//! Task-graph generation and subgraph sampling.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, NodeId, QUERY_LABEL};
use crate::solvers;
use crate::task::{GoldAnswer, InstanceMeta, Query, TaskInstance, TaskKind};

pub const DEFAULT_MAX_TRIES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_min: u32,
    pub n_max: u32,
    pub p: f64,
    pub weight_min: u32,
    pub weight_max: u32,
    pub seed: u64,
    #[serde(default = "default_max_tries")]
    pub max_tries: usize,
}

fn default_max_tries() -> usize {
    DEFAULT_MAX_TRIES
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { n_min: 5, n_max: 15, p: 0.3, weight_min: 1, weight_max: 4, seed: 0, max_tries: DEFAULT_MAX_TRIES }
    }
}

impl GenConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        GenConfig { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidConfig(format!("edge probability {} outside [0, 1]", self.p)));
        }
        if self.n_min > self.n_max || self.n_min == 0 {
            return Err(Error::InvalidConfig(format!("node range [{}, {}]", self.n_min, self.n_max)));
        }
        if self.weight_min == 0 || self.weight_min > self.weight_max {
            return Err(Error::InvalidConfig(format!("weight range [{}, {}]", self.weight_min, self.weight_max)));
        }
        Ok(())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn er_with(rng: &mut ChaCha8Rng, cfg: &GenConfig, directed: bool) -> Graph {
    let n = rng.gen_range(cfg.n_min..=cfg.n_max);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u == v || (!directed && v < u) {
                continue;
            }
            if rng.gen_bool(cfg.p) {
                edges.push(Edge::new(u, v));
            }
        }
    }
    Graph::new(directed, (0..n).map(NodeId), edges).expect("generated edges are simple")
}

/// Erdős–Rényi graph with `n` uniform in `[n_min, n_max]` and each pair
/// (ordered, if directed) joined independently with probability `p`.
pub fn gen_er(cfg: &GenConfig, directed: bool) -> Result<Graph> {
    cfg.validate()?;
    Ok(er_with(&mut rng(cfg.seed), cfg, directed))
}

/// Orient every edge from the earlier to the later node of `permutation`.
pub fn orient_by_permutation(g: &Graph, permutation: &[NodeId]) -> Result<Graph> {
    let pos: std::collections::HashMap<NodeId, usize> =
        permutation.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    if pos.len() != g.node_count() || g.nodes().iter().any(|n| !pos.contains_key(n)) {
        return Err(Error::InvalidConfig("permutation must list every node once".into()));
    }
    let edges = g
        .edges()
        .iter()
        .map(|e| if pos[&e.u] < pos[&e.v] { *e } else { e.reversed() })
        .collect();
    g.with_edges(true, edges)
}

/// Acyclic orientation from a seeded random node permutation.
pub fn orient_dag(g: &Graph, seed: u64) -> Result<Graph> {
    if g.is_directed() {
        return Err(Error::InvalidGraph("orient_dag expects an undirected graph".into()));
    }
    let mut perm = g.nodes().to_vec();
    perm.shuffle(&mut rng(seed));
    orient_by_permutation(g, &perm)
}

fn weights_with(rng: &mut ChaCha8Rng, g: &Graph, cfg: &GenConfig) -> Result<Graph> {
    let edges = g
        .edges()
        .iter()
        .map(|e| Edge { weight: Some(rng.gen_range(cfg.weight_min..=cfg.weight_max)), ..*e })
        .collect();
    g.with_edges(g.is_directed(), edges)
}

/// Integer weights uniform in `[weight_min, weight_max]`.
pub fn assign_weights(g: &Graph, cfg: &GenConfig) -> Result<Graph> {
    cfg.validate()?;
    if g.is_weighted() {
        return Err(Error::InvalidGraph("graph is already weighted".into()));
    }
    weights_with(&mut rng(cfg.seed), g, cfg)
}

fn random_pair(rng: &mut ChaCha8Rng, g: &Graph) -> (NodeId, NodeId) {
    let n = g.node_count();
    let a = rng.gen_range(0..n);
    let mut b = rng.gen_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (g.nodes()[a], g.nodes()[b])
}

/// Rejection-sample a graph and query until the task's filter accepts.
///
/// Every accepted graph has at least one edge (each order needs something to
/// describe). Connectivity instances draw the wanted answer with a fair coin
/// first, so connected and disconnected pairs appear equally often.
pub fn gen_task_instance(task: TaskKind, cfg: &GenConfig) -> Result<TaskInstance> {
    cfg.validate()?;
    if task == TaskKind::NodeClassification {
        return Err(Error::InvalidConfig("node classification instances come from sampling".into()));
    }
    if cfg.n_min < 2 {
        return Err(Error::InvalidConfig("task graphs need at least two nodes".into()));
    }
    let mut rng = rng(cfg.seed);
    let want_connected = rng.gen_bool(0.5);
    for _ in 0..cfg.max_tries {
        let g = er_with(&mut rng, cfg, false);
        if g.edge_count() == 0 {
            continue;
        }
        let meta = InstanceMeta::default();
        let inst = match task {
            TaskKind::Connectivity => {
                let (u, v) = random_pair(&mut rng, &g);
                let connected = solvers::connected_pair(&g, u, v)?;
                if connected != want_connected {
                    continue;
                }
                TaskInstance {
                    task,
                    graph: g,
                    query: Query::Pair { source: u, target: v },
                    gold: GoldAnswer::YesNo { value: connected },
                    meta,
                }
            }
            TaskKind::Cycle => {
                let cycle = solvers::find_cycle(&g);
                TaskInstance {
                    task,
                    gold: GoldAnswer::YesNo { value: cycle.is_some() },
                    graph: g,
                    query: Query::None,
                    meta: InstanceMeta { cycle, ..meta },
                }
            }
            TaskKind::HamiltonPath => {
                let Some(path) = solvers::hamilton_path(&g) else { continue };
                TaskInstance {
                    task,
                    graph: g,
                    query: Query::None,
                    gold: GoldAnswer::Path { nodes: path, weight: None },
                    meta,
                }
            }
            TaskKind::ShortestPath => {
                let g = weights_with(&mut rng, &g, cfg)?;
                let (u, v) = random_pair(&mut rng, &g);
                let Ok((path, weight)) = solvers::shortest_path(&g, u, v) else { continue };
                TaskInstance {
                    task,
                    graph: g,
                    query: Query::Pair { source: u, target: v },
                    gold: GoldAnswer::Path { nodes: path, weight: Some(weight) },
                    meta,
                }
            }
            TaskKind::TopoSort => {
                let dag = orient_dag(&g, rng.gen())?;
                let order = solvers::topo_sort(&dag)?;
                TaskInstance { task, graph: dag, query: Query::None, gold: GoldAnswer::Order { nodes: order }, meta }
            }
            TaskKind::NodeClassification => unreachable!(),
        };
        return Ok(inst);
    }
    Err(Error::GenerationExhausted { task: task.to_string(), tries: cfg.max_tries })
}

/// Nodes within `hops` of `center`, in BFS discovery order with each
/// adjacency list shuffled by the seed, truncated to `max_nodes`.
pub fn sample_ego(g: &Graph, center: NodeId, hops: usize, max_nodes: usize, seed: u64) -> Result<Graph> {
    let c = g.index_of(center)?;
    let mut rng = rng(seed);
    let mut seen = vec![false; g.node_count()];
    let mut order = vec![c];
    seen[c] = true;
    let mut queue = VecDeque::from([(c, 0usize)]);
    'outer: while let Some((x, d)) = queue.pop_front() {
        if d == hops {
            continue;
        }
        let mut nbrs = g.undirected_indices(x);
        nbrs.shuffle(&mut rng);
        for y in nbrs {
            if order.len() >= max_nodes {
                break 'outer;
            }
            if !seen[y] {
                seen[y] = true;
                order.push(y);
                queue.push_back((y, d + 1));
            }
        }
    }
    order.truncate(max_nodes.max(1));
    let keep: Vec<NodeId> = order.into_iter().map(|i| g.nodes()[i]).collect();
    g.induced(&keep)
}

/// Forest-fire sample: starting from `seed_node`, each not-yet-burned
/// neighbor of a burning node catches fire with probability `p_burn`. Stops
/// at `max_nodes` or when the fire dies out.
pub fn sample_forest_fire(g: &Graph, seed_node: NodeId, p_burn: f64, max_nodes: usize, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p_burn) {
        return Err(Error::InvalidConfig(format!("burn probability {p_burn} outside [0, 1]")));
    }
    let s = g.index_of(seed_node)?;
    let mut rng = rng(seed);
    let mut burned = vec![false; g.node_count()];
    burned[s] = true;
    let mut order = vec![s];
    let mut front = VecDeque::from([s]);
    'fire: while let Some(x) = front.pop_front() {
        for y in g.undirected_indices(x) {
            if order.len() >= max_nodes {
                break 'fire;
            }
            if !burned[y] && rng.gen_bool(p_burn) {
                burned[y] = true;
                order.push(y);
                front.push_back(y);
            }
        }
    }
    let keep: Vec<NodeId> = order.into_iter().map(|i| g.nodes()[i]).collect();
    g.induced(&keep)
}

/// Mask one node's label with `?`, choosing uniformly among nodes that have
/// at least one labeled neighbor. Returns the masked graph, the node and its
/// true label.
pub fn pick_query_node(g: &Graph, seed: u64) -> Result<(Graph, NodeId, String)> {
    let labels = g.labels().ok_or(Error::NoEligibleQueryNode)?;
    let has_label = |i: usize| labels.get(&g.nodes()[i]).is_some_and(|l| l != QUERY_LABEL);
    let eligible: Vec<usize> = (0..g.node_count())
        .filter(|&i| has_label(i) && g.undirected_indices(i).into_iter().any(has_label))
        .collect();
    if eligible.is_empty() {
        return Err(Error::NoEligibleQueryNode);
    }
    let pick = g.nodes()[eligible[rng(seed).gen_range(0..eligible.len())]];
    let truth = labels[&pick].clone();
    let mut masked = labels.clone();
    masked.insert(pick, QUERY_LABEL.to_string());
    Ok((g.with_label_map(masked)?, pick, truth))
}

/// Build a node-classification instance from a labeled sample.
pub fn node_classification_instance(sample: &Graph, seed: u64, meta: InstanceMeta) -> Result<TaskInstance> {
    let (graph, node, label) = pick_query_node(sample, seed)?;
    Ok(TaskInstance {
        task: TaskKind::NodeClassification,
        graph,
        query: Query::Node { node },
        gold: GoldAnswer::Label { label },
        meta,
    })
}

fn parse_id(path: &Path, line: usize, tok: &str) -> Result<NodeId> {
    tok.parse::<u32>().map(NodeId).map_err(|_| Error::Load {
        path: path.to_path_buf(),
        reason: format!("line {line}: bad node id {tok:?}"),
    })
}

/// Load an undirected labeled graph from an edge list (`u v` per line) and a
/// label file (`node label` per line). Blank lines and `#` comments are
/// skipped; self-loops and repeated edges are dropped. Every node must carry
/// a label.
pub fn load_labeled_graph(edge_path: &Path, label_path: &Path) -> Result<Graph> {
    let mut labels = BTreeMap::new();
    let text = fs::read_to_string(label_path)
        .map_err(|e| Error::Load { path: label_path.to_path_buf(), reason: e.to_string() })?;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let (Some(n), Some(l)) = (toks.next(), toks.next()) else {
            return Err(Error::Load { path: label_path.to_path_buf(), reason: format!("line {}: expected `node label`", i + 1) });
        };
        labels.insert(parse_id(label_path, i + 1, n)?, l.to_string());
    }

    let text = fs::read_to_string(edge_path)
        .map_err(|e| Error::Load { path: edge_path.to_path_buf(), reason: e.to_string() })?;
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 2 {
            return Err(Error::Load { path: edge_path.to_path_buf(), reason: format!("line {}: expected `u v`", i + 1) });
        }
        let (u, v) = (parse_id(edge_path, i + 1, toks[0])?, parse_id(edge_path, i + 1, toks[1])?);
        for n in [u, v] {
            if !labels.contains_key(&n) {
                return Err(Error::Load { path: label_path.to_path_buf(), reason: format!("node {n} has no label") });
            }
        }
        if u != v && seen.insert((u.min(v), u.max(v))) {
            edges.push(Edge::new(u, v));
        }
    }
    let nodes: Vec<NodeId> = labels.keys().copied().collect();
    Graph::with_labels(false, nodes, edges, Some(labels))
}

/// Labeled ER stand-in for a citation graph, used when no dataset files are
/// supplied: `nodes` nodes, mean degree `mean_degree`, labels uniform over
/// `classes` classes.
pub fn synthetic_labeled_graph(nodes: u32, mean_degree: f64, classes: u32, seed: u64) -> Result<Graph> {
    let p = (mean_degree / (nodes.max(2) - 1) as f64).clamp(0.0, 1.0);
    let cfg = GenConfig { n_min: nodes, n_max: nodes, p, seed, ..GenConfig::default() };
    let mut r = rng(seed);
    let g = er_with(&mut r, &cfg, false);
    let labels = g.nodes().iter().map(|&n| (n, r.gen_range(0..classes.max(1)).to_string())).collect();
    g.with_label_map(labels)
}

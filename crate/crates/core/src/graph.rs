//! Graph representation shared by every stage of the toolkit.
//!
//! A [`Graph`] is immutable once built. Nodes are kept sorted by id, so a
//! node's position in [`Graph::nodes`] doubles as its dense index, and every
//! adjacency list is sorted ascending. Undirected edges are stored once, with
//! the smaller endpoint first.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label reserved for the node whose class is being asked about.
pub const QUERY_LABEL: &str = "?";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<u32>,
}

impl Edge {
    pub fn new(u: impl Into<NodeId>, v: impl Into<NodeId>) -> Self {
        Edge { u: u.into(), v: v.into(), weight: None }
    }

    pub fn weighted(u: impl Into<NodeId>, v: impl Into<NodeId>, w: u32) -> Self {
        Edge { u: u.into(), v: v.into(), weight: Some(w) }
    }

    /// Weight used by path computations; unweighted edges count as 1.
    pub fn cost(&self) -> u64 {
        u64::from(self.weight.unwrap_or(1))
    }

    pub fn reversed(&self) -> Edge {
        Edge { u: self.v, v: self.u, weight: self.weight }
    }

    /// Endpoint pair in storage orientation for a graph of the given kind.
    pub fn key(&self, directed: bool) -> (NodeId, NodeId) {
        if directed || self.u <= self.v {
            (self.u, self.v)
        } else {
            (self.v, self.u)
        }
    }

    pub fn touches(&self, n: NodeId) -> bool {
        self.u == n || self.v == n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderKind {
    Random,
    Bfs,
    Dfs,
    Pr,
    Ppr,
    ShortestPath,
    LongestPath,
}

impl OrderKind {
    pub const ALL: [OrderKind; 7] = [
        OrderKind::Random,
        OrderKind::Bfs,
        OrderKind::Dfs,
        OrderKind::Pr,
        OrderKind::Ppr,
        OrderKind::ShortestPath,
        OrderKind::LongestPath,
    ];

    /// The five orders of the main study.
    pub const MAIN: [OrderKind; 5] =
        [OrderKind::Random, OrderKind::Bfs, OrderKind::Dfs, OrderKind::Pr, OrderKind::Ppr];

    pub fn as_str(self) -> &'static str {
        match self {
            OrderKind::Random => "random",
            OrderKind::Bfs => "bfs",
            OrderKind::Dfs => "dfs",
            OrderKind::Pr => "pr",
            OrderKind::Ppr => "ppr",
            OrderKind::ShortestPath => "shortest_path",
            OrderKind::LongestPath => "longest_path",
        }
    }
}

impl fmt::Display for OrderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OrderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OrderKind::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown order {s:?}")))
    }
}

/// An ordered permutation of a graph's edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSequence {
    pub order: OrderKind,
    pub edges: Vec<Edge>,
}

impl EdgeSequence {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Plain serialized form of a graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphData {
    pub directed: bool,
    pub nodes: Vec<NodeId>,
    pub edges: Vec<Edge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<BTreeMap<NodeId, String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GraphData", into = "GraphData")]
pub struct Graph {
    directed: bool,
    nodes: Vec<NodeId>,
    edges: Vec<Edge>,
    labels: Option<BTreeMap<NodeId, String>>,
    index: HashMap<NodeId, usize>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
    edge_index: HashMap<(NodeId, NodeId), usize>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.directed == other.directed
            && self.nodes == other.nodes
            && self.edges == other.edges
            && self.labels == other.labels
    }
}

impl Eq for Graph {}

impl TryFrom<GraphData> for Graph {
    type Error = Error;

    fn try_from(d: GraphData) -> Result<Self> {
        Graph::with_labels(d.directed, d.nodes, d.edges, d.labels)
    }
}

impl From<Graph> for GraphData {
    fn from(g: Graph) -> Self {
        GraphData { directed: g.directed, nodes: g.nodes, edges: g.edges, labels: g.labels }
    }
}

impl Graph {
    pub fn new(directed: bool, nodes: impl IntoIterator<Item = NodeId>, edges: Vec<Edge>) -> Result<Self> {
        Graph::with_labels(directed, nodes, edges, None)
    }

    /// Undirected graph on nodes `0..n`.
    pub fn undirected(n: u32, edges: &[(u32, u32)]) -> Result<Self> {
        Graph::new(false, (0..n).map(NodeId), edges.iter().map(|&(u, v)| Edge::new(u, v)).collect())
    }

    /// Directed graph on nodes `0..n`.
    pub fn directed(n: u32, edges: &[(u32, u32)]) -> Result<Self> {
        Graph::new(true, (0..n).map(NodeId), edges.iter().map(|&(u, v)| Edge::new(u, v)).collect())
    }

    /// Weighted undirected graph on nodes `0..n`.
    pub fn weighted(n: u32, edges: &[(u32, u32, u32)]) -> Result<Self> {
        Graph::new(
            false,
            (0..n).map(NodeId),
            edges.iter().map(|&(u, v, w)| Edge::weighted(u, v, w)).collect(),
        )
    }

    pub fn with_labels(
        directed: bool,
        nodes: impl IntoIterator<Item = NodeId>,
        edges: Vec<Edge>,
        labels: Option<BTreeMap<NodeId, String>>,
    ) -> Result<Self> {
        let mut nodes: Vec<NodeId> = nodes.into_iter().collect();
        nodes.sort_unstable();
        if nodes.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph("duplicate node id".into()));
        }
        let index: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();

        let weighted = edges.first().is_some_and(|e| e.weight.is_some());
        let mut canon = Vec::with_capacity(edges.len());
        let mut seen = HashSet::with_capacity(edges.len());
        for e in edges {
            if e.u == e.v {
                return Err(Error::InvalidGraph(format!("self-loop on node {}", e.u)));
            }
            for n in [e.u, e.v] {
                if !index.contains_key(&n) {
                    return Err(Error::InvalidGraph(format!("edge endpoint {n} is not a node")));
                }
            }
            if e.weight.is_some() != weighted {
                return Err(Error::InvalidGraph("mixed weighted and unweighted edges".into()));
            }
            if e.weight == Some(0) {
                return Err(Error::InvalidGraph("edge weights must be positive".into()));
            }
            let (u, v) = e.key(directed);
            if !seen.insert((u, v)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u}, {v})")));
            }
            canon.push(Edge { u, v, weight: e.weight });
        }
        canon.sort_unstable_by_key(|e| (e.u, e.v));

        if let Some(labels) = &labels {
            if let Some(n) = labels.keys().find(|n| !index.contains_key(n)) {
                return Err(Error::InvalidGraph(format!("label for unknown node {n}")));
            }
            if labels.values().filter(|l| l.as_str() == QUERY_LABEL).count() > 1 {
                return Err(Error::InvalidGraph("more than one node labeled '?'".into()));
            }
        }

        let mut out_adj = vec![Vec::new(); nodes.len()];
        let mut in_adj = vec![Vec::new(); nodes.len()];
        let mut edge_index = HashMap::with_capacity(canon.len());
        for (i, e) in canon.iter().enumerate() {
            let (a, b) = (index[&e.u], index[&e.v]);
            out_adj[a].push(b);
            in_adj[b].push(a);
            if !directed {
                out_adj[b].push(a);
                in_adj[a].push(b);
            }
            edge_index.insert((e.u, e.v), i);
        }
        for list in out_adj.iter_mut().chain(in_adj.iter_mut()) {
            list.sort_unstable();
        }

        Ok(Graph { directed, nodes, edges: canon, labels, index, out_adj, in_adj, edge_index })
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn is_weighted(&self) -> bool {
        self.edges.first().is_some_and(|e| e.weight.is_some())
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Edges in canonical orientation, sorted; position is the canonical edge id.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn labels(&self) -> Option<&BTreeMap<NodeId, String>> {
        self.labels.as_ref()
    }

    pub fn label(&self, n: NodeId) -> Option<&str> {
        self.labels.as_ref()?.get(&n).map(String::as_str)
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.index.contains_key(&n)
    }

    /// Dense index of a node (its position in [`Graph::nodes`]).
    pub fn index_of(&self, n: NodeId) -> Result<usize> {
        self.index.get(&n).copied().ok_or(Error::NodeNotFound(n))
    }

    /// Out-neighbors (or all neighbors, if undirected) as dense indices, ascending.
    pub fn out_indices(&self, i: usize) -> &[usize] {
        &self.out_adj[i]
    }

    pub fn in_indices(&self, i: usize) -> &[usize] {
        &self.in_adj[i]
    }

    /// Indices adjacent in either direction, ascending and deduplicated.
    pub fn undirected_indices(&self, i: usize) -> Vec<usize> {
        if !self.directed {
            return self.out_adj[i].clone();
        }
        let mut all: Vec<usize> = self.out_adj[i].iter().chain(&self.in_adj[i]).copied().collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    pub fn neighbors(&self, v: NodeId) -> Result<Vec<NodeId>> {
        let i = self.index_of(v)?;
        Ok(self.out_adj[i].iter().map(|&j| self.nodes[j]).collect())
    }

    pub fn in_neighbors(&self, v: NodeId) -> Result<Vec<NodeId>> {
        let i = self.index_of(v)?;
        Ok(self.in_adj[i].iter().map(|&j| self.nodes[j]).collect())
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.out_adj[i].len()
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.in_adj[i].len()
    }

    /// Canonical id of the edge between `u` and `v`, honoring direction.
    pub fn edge_id(&self, u: NodeId, v: NodeId) -> Option<usize> {
        let key = if self.directed || u <= v { (u, v) } else { (v, u) };
        self.edge_index.get(&key).copied()
    }

    pub fn edge_between(&self, u: NodeId, v: NodeId) -> Option<&Edge> {
        self.edge_id(u, v).map(|i| &self.edges[i])
    }

    /// Canonical id of an edge given in either orientation.
    pub fn canonical_id(&self, e: &Edge) -> Option<usize> {
        self.edge_id(e.u, e.v)
    }

    /// Line graph: one node per edge (node id = canonical edge id), adjacent
    /// when the two edges share an endpoint. Direction is ignored.
    pub fn line_graph(&self) -> Result<Graph> {
        let adj = self.line_adjacency()?;
        let mut edges = Vec::new();
        for (a, list) in adj.iter().enumerate() {
            for &b in list.iter().filter(|&&b| b > a) {
                edges.push(Edge::new(a as u32, b as u32));
            }
        }
        Graph::new(false, (0..self.edges.len() as u32).map(NodeId), edges)
    }

    /// Line-graph adjacency over canonical edge ids, each list ascending.
    pub fn line_adjacency(&self) -> Result<Vec<Vec<usize>>> {
        if self.edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for (id, e) in self.edges.iter().enumerate() {
            incident[self.index[&e.u]].push(id);
            incident[self.index[&e.v]].push(id);
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.edges.len()];
        for ids in &incident {
            for &a in ids {
                for &b in ids {
                    if a != b {
                        adj[a].push(b);
                    }
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(adj)
    }

    /// Component id per dense node index, ignoring edge direction.
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.nodes.len()];
        let mut next = 0;
        for s in 0..self.nodes.len() {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for y in self.out_adj[x].iter().chain(&self.in_adj[x]) {
                    if comp[*y] == usize::MAX {
                        comp[*y] = next;
                        stack.push(*y);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Hop distances from `source` following out-edges; `None` when unreachable.
    pub fn hop_distances(&self, source: NodeId) -> Result<Vec<Option<usize>>> {
        let s = self.index_of(source)?;
        let mut dist = vec![None; self.nodes.len()];
        dist[s] = Some(0);
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            let d = dist[x].unwrap_or(0);
            for &y in &self.out_adj[x] {
                if dist[y].is_none() {
                    dist[y] = Some(d + 1);
                    queue.push_back(y);
                }
            }
        }
        Ok(dist)
    }

    /// Induced subgraph on `keep`, preserving ids, weights and labels.
    pub fn induced(&self, keep: &[NodeId]) -> Result<Graph> {
        let set: HashSet<NodeId> = keep.iter().copied().collect();
        for n in &set {
            self.index_of(*n)?;
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| set.contains(&e.u) && set.contains(&e.v))
            .copied()
            .collect();
        let labels = self
            .labels
            .as_ref()
            .map(|l| l.iter().filter(|(n, _)| set.contains(n)).map(|(n, s)| (*n, s.clone())).collect());
        Graph::with_labels(self.directed, set, edges, labels)
    }

    /// Same topology with the given edges replaced (used when re-weighting or re-orienting).
    pub fn with_edges(&self, directed: bool, edges: Vec<Edge>) -> Result<Graph> {
        Graph::with_labels(directed, self.nodes.iter().copied(), edges, self.labels.clone())
    }

    pub fn with_label_map(&self, labels: BTreeMap<NodeId, String>) -> Result<Graph> {
        Graph::with_labels(self.directed, self.nodes.iter().copied(), self.edges.clone(), Some(labels))
    }

    /// Stable textual fingerprint used to detect duplicate graphs.
    pub fn fingerprint(&self) -> String {
        serde_json::to_string(&GraphData::from(self.clone())).unwrap_or_default()
    }
}

/// Canonical-orientation multiset of an edge list, sorted.
pub fn canonical_multiset(edges: &[Edge], directed: bool) -> Vec<(NodeId, NodeId)> {
    let mut keys: Vec<_> = edges.iter().map(|e| e.key(directed)).collect();
    keys.sort_unstable();
    keys
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<NodeId> {
        v.iter().copied().map(NodeId).collect()
    }

    #[test]
    fn star_neighbors() {
        let g = Graph::undirected(5, &[(4, 0), (4, 1), (4, 2)]).unwrap();
        assert_eq!(g.neighbors(NodeId(4)).unwrap(), ids(&[0, 1, 2]));
        assert!(g.neighbors(NodeId(3)).unwrap().is_empty());
    }

    #[test]
    fn directed_neighbors() {
        let g = Graph::directed(4, &[(0, 3), (3, 2)]).unwrap();
        assert_eq!(g.neighbors(NodeId(3)).unwrap(), ids(&[2]));
        assert_eq!(g.in_neighbors(NodeId(2)).unwrap(), ids(&[3]));
        assert!(g.in_neighbors(NodeId(0)).unwrap().is_empty());
    }

    #[test]
    fn undirected_in_neighbors_match() {
        let g = Graph::undirected(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(g.in_neighbors(NodeId(1)).unwrap(), ids(&[0, 2]));
        assert_eq!(g.in_neighbors(NodeId(1)).unwrap(), g.neighbors(NodeId(1)).unwrap());
    }

    #[test]
    fn unknown_node() {
        let g = Graph::undirected(2, &[(0, 1)]).unwrap();
        assert!(matches!(g.neighbors(NodeId(9)), Err(Error::NodeNotFound(NodeId(9)))));
        assert!(matches!(g.in_neighbors(NodeId(9)), Err(Error::NodeNotFound(_))));
    }

    #[test]
    fn canonical_storage() {
        let g = Graph::undirected(5, &[(4, 0), (2, 1)]).unwrap();
        assert_eq!(g.edges(), &[Edge::new(0, 4), Edge::new(1, 2)]);
        assert!(Graph::undirected(3, &[(0, 1), (1, 0)]).is_err());
        assert!(Graph::directed(3, &[(0, 1), (1, 0)]).is_ok());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Graph::undirected(3, &[(1, 1)]).is_err());
        assert!(Graph::undirected(3, &[(1, 7)]).is_err());
        assert!(Graph::weighted(3, &[(0, 1, 0)]).is_err());
        let mixed = vec![Edge::weighted(0, 1, 2), Edge::new(1, 2)];
        assert!(Graph::new(false, ids(&[0, 1, 2]), mixed).is_err());
        let labels: BTreeMap<_, _> =
            [(NodeId(0), "?".to_string()), (NodeId(1), "?".to_string())].into_iter().collect();
        assert!(Graph::with_labels(false, ids(&[0, 1]), vec![], Some(labels)).is_err());
    }

    #[test]
    fn line_graph_small_cases() {
        let path = Graph::undirected(3, &[(0, 1), (1, 2)]).unwrap().line_graph().unwrap();
        assert_eq!((path.node_count(), path.edge_count()), (2, 1));
        let tri = Graph::undirected(3, &[(0, 1), (1, 2), (0, 2)]).unwrap().line_graph().unwrap();
        assert_eq!((tri.node_count(), tri.edge_count()), (3, 3));
        let star = Graph::undirected(4, &[(0, 1), (0, 2), (0, 3)]).unwrap().line_graph().unwrap();
        assert_eq!((star.node_count(), star.edge_count()), (3, 3));
        let empty = Graph::undirected(3, &[]).unwrap();
        assert!(matches!(empty.line_graph(), Err(Error::EmptyGraph)));
    }

    #[test]
    fn serde_roundtrip_keeps_labels() {
        let labels: BTreeMap<_, _> =
            [(NodeId(1758), "3".to_string()), (NodeId(2217), "?".to_string())].into_iter().collect();
        let g = Graph::with_labels(false, ids(&[1758, 2217]), vec![Edge::new(2217, 1758)], Some(labels))
            .unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: Graph = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
        assert_eq!(back.label(NodeId(2217)), Some("?"));
    }

    #[test]
    fn hop_distances_unreachable() {
        let g = Graph::undirected(4, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(g.hop_distances(NodeId(0)).unwrap(), vec![Some(0), Some(1), Some(2), None]);
    }
}

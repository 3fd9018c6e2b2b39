//! Edge description orders.
//!
//! Traversal orders walk the line graph (one vertex per edge, adjacent when
//! two edges share an endpoint), so every edge is emitted exactly once even
//! when a node-level traversal would skip some. Neighbors are visited by
//! ascending canonical edge id; the seed only picks roots.

use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeSequence, Graph, NodeId, OrderKind};
use crate::ranking::{self, RankConfig, RankScores};
use crate::solvers;
use crate::task::{TaskInstance, TaskKind};

pub fn order_random(g: &Graph, seed: u64) -> EdgeSequence {
    let mut edges = g.edges().to_vec();
    edges.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    EdgeSequence { order: OrderKind::Random, edges }
}

/// Line-graph traversal. The first root is `first_root` if given, otherwise
/// drawn from the seed; whenever a component is exhausted a new root is drawn
/// among the unvisited edges. Returns `(edge id, depth)` pairs in visitation
/// order, with depth restarting at 0 on each root.
fn traverse(
    g: &Graph,
    seed: u64,
    breadth_first: bool,
    first_root: Option<usize>,
) -> Result<Vec<(usize, usize)>> {
    let adj = g.line_adjacency()?;
    let m = adj.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut visited = vec![false; m];
    let mut out = Vec::with_capacity(m);
    let mut forced = first_root;
    while out.len() < m {
        let root = forced.take().unwrap_or_else(|| {
            let unvisited: Vec<usize> = (0..m).filter(|&e| !visited[e]).collect();
            unvisited[rng.gen_range(0..unvisited.len())]
        });
        walk_component(&adj, root, breadth_first, &mut visited, &mut out);
    }
    Ok(out)
}

fn walk_component(
    adj: &[Vec<usize>],
    root: usize,
    breadth_first: bool,
    visited: &mut [bool],
    out: &mut Vec<(usize, usize)>,
) {
    if breadth_first {
        visited[root] = true;
        let mut queue = VecDeque::from([(root, 0)]);
        while let Some((e, depth)) = queue.pop_front() {
            out.push((e, depth));
            for &f in &adj[e] {
                if !visited[f] {
                    visited[f] = true;
                    queue.push_back((f, depth + 1));
                }
            }
        }
    } else {
        // preorder, same visit order as the recursive formulation
        let mut stack = vec![(root, 0)];
        while let Some((e, depth)) = stack.pop() {
            if visited[e] {
                continue;
            }
            visited[e] = true;
            out.push((e, depth));
            stack.extend(adj[e].iter().rev().filter(|&&f| !visited[f]).map(|&f| (f, depth + 1)));
        }
    }
}

fn to_sequence(g: &Graph, visit: Vec<(usize, usize)>, order: OrderKind) -> EdgeSequence {
    EdgeSequence { order, edges: visit.into_iter().map(|(e, _)| g.edges()[e]).collect() }
}

/// BFS over the line graph with the `(edge id, depth)` of each emission.
pub fn bfs_with_depth(g: &Graph, seed: u64) -> Result<Vec<(usize, usize)>> {
    traverse(g, seed, true, None)
}

pub fn order_bfs(g: &Graph, seed: u64) -> Result<EdgeSequence> {
    Ok(to_sequence(g, traverse(g, seed, true, None)?, OrderKind::Bfs))
}

pub fn order_dfs(g: &Graph, seed: u64) -> Result<EdgeSequence> {
    Ok(to_sequence(g, traverse(g, seed, false, None)?, OrderKind::Dfs))
}

/// BFS or DFS starting from a chosen root edge.
pub fn order_from_root(g: &Graph, root: (NodeId, NodeId), seed: u64, breadth_first: bool) -> Result<EdgeSequence> {
    let root_id = g
        .edge_id(root.0, root.1)
        .ok_or_else(|| Error::InvalidWitness(format!("({}, {}) is not an edge", root.0, root.1)))?;
    let visit = traverse(g, seed, breadth_first, Some(root_id))?;
    let order = if breadth_first { OrderKind::Bfs } else { OrderKind::Dfs };
    Ok(to_sequence(g, visit, order))
}

/// Rank-driven order: visit nodes by descending score and emit each node's
/// edges toward its neighbors (highest-scored neighbor first), skipping edges
/// already emitted. Used for both the PageRank and personalized orders.
pub fn order_by_scores(g: &Graph, scores: &RankScores, kind: OrderKind) -> Result<EdgeSequence> {
    for &n in g.nodes() {
        if scores.get(n).is_none() {
            return Err(Error::MissingScore(n));
        }
    }
    let mut nodes = g.nodes().to_vec();
    nodes.sort_by_key(|&n| scores.rank_key(n));
    let mut emitted = vec![false; g.edge_count()];
    let mut edges = Vec::with_capacity(g.edge_count());
    for v in nodes {
        let mut nbrs = g.neighbors(v)?;
        nbrs.sort_by_key(|&u| scores.rank_key(u));
        for u in nbrs {
            let Some(id) = g.edge_id(v, u) else { continue };
            if emitted[id] {
                continue;
            }
            emitted[id] = true;
            let w = g.edges()[id].weight;
            edges.push(Edge { u: v, v: u, weight: w });
        }
    }
    Ok(EdgeSequence { order: kind, edges })
}

/// Witness path edges first, in path order; the rest in canonical order.
fn order_by_witness(g: &Graph, witness: &[NodeId], kind: OrderKind) -> Result<EdgeSequence> {
    if witness.is_empty() {
        return Err(Error::InvalidWitness("empty path".into()));
    }
    let mut used = HashSet::new();
    let mut edges = Vec::with_capacity(g.edge_count());
    for w in witness.windows(2) {
        let id = g
            .edge_id(w[0], w[1])
            .ok_or_else(|| Error::InvalidWitness(format!("({}, {}) is not an edge", w[0], w[1])))?;
        if !used.insert(id) {
            return Err(Error::InvalidWitness(format!("edge ({}, {}) repeated", w[0], w[1])));
        }
        edges.push(Edge { u: w[0], v: w[1], weight: g.edges()[id].weight });
    }
    if let Some(n) = witness.iter().find(|n| !g.contains(**n)) {
        return Err(Error::InvalidWitness(format!("node {n} not in graph")));
    }
    edges.extend(g.edges().iter().enumerate().filter(|(i, _)| !used.contains(i)).map(|(_, e)| *e));
    Ok(EdgeSequence { order: kind, edges })
}

pub fn order_shortest_path(g: &Graph, witness: &[NodeId]) -> Result<EdgeSequence> {
    order_by_witness(g, witness, OrderKind::ShortestPath)
}

pub fn order_longest_path(g: &Graph, witness: &[NodeId]) -> Result<EdgeSequence> {
    order_by_witness(g, witness, OrderKind::LongestPath)
}

/// Produce the edge sequence of `order` for a task instance, computing
/// whatever scores or witnesses the order needs.
pub fn describe_order(inst: &TaskInstance, order: OrderKind, seed: u64) -> Result<EdgeSequence> {
    let g = &inst.graph;
    match order {
        OrderKind::Random => {
            if g.edge_count() == 0 {
                return Err(Error::EmptyGraph);
            }
            Ok(order_random(g, seed))
        }
        OrderKind::Bfs => order_bfs(g, seed),
        OrderKind::Dfs => order_dfs(g, seed),
        OrderKind::Pr => {
            let scores = ranking::pagerank(g, RankConfig::default())?;
            order_by_scores(g, &scores, OrderKind::Pr)
        }
        OrderKind::Ppr => {
            let e = ranking::build_personalization(inst)?;
            let scores = ranking::personalized_pagerank(g, &e, RankConfig::default())?;
            order_by_scores(g, &scores, OrderKind::Ppr)
        }
        OrderKind::ShortestPath | OrderKind::LongestPath => {
            let not_applicable =
                || Error::OrderNotApplicable { order: order.to_string(), task: inst.task.to_string() };
            if inst.task != TaskKind::ShortestPath {
                return Err(not_applicable());
            }
            let (u, v) = inst.pair().ok_or_else(not_applicable)?;
            if order == OrderKind::ShortestPath {
                let (path, _) = solvers::shortest_path(g, u, v)?;
                order_shortest_path(g, &path)
            } else {
                let path = solvers::longest_simple_path(g, u, v)?;
                order_longest_path(g, &path)
            }
        }
    }
}

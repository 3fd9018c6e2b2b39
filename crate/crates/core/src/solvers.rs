//! Exact solvers for the six tasks, plus answer validation.
//!
//! Ties are always broken toward the smallest node id, so every gold answer
//! and every witness is reproducible.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use crate::error::{Error, Result};
use crate::evaluation::ParsedAnswer;
use crate::graph::{Graph, NodeId};
use crate::task::{GoldAnswer, TaskInstance, TaskKind};

pub fn connected_pair(g: &Graph, u: NodeId, v: NodeId) -> Result<bool> {
    let (a, b) = (g.index_of(u)?, g.index_of(v)?);
    let comp = g.components();
    Ok(comp[a] == comp[b])
}

/// Nodes of some simple cycle, in cycle order, or `None` for a forest (or DAG).
pub fn find_cycle(g: &Graph) -> Option<Vec<NodeId>> {
    let n = g.node_count();
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; n];
    let mut parent = vec![usize::MAX; n];
    for root in 0..n {
        if state[root] != 0 {
            continue;
        }
        // (node, next neighbor position)
        let mut stack = vec![(root, 0usize)];
        state[root] = 1;
        while let Some(&mut (x, ref mut pos)) = stack.last_mut() {
            let adj = g.out_indices(x);
            if *pos == adj.len() {
                state[x] = 2;
                stack.pop();
                continue;
            }
            let y = adj[*pos];
            *pos += 1;
            if !g.is_directed() && y == parent[x] {
                continue;
            }
            match state[y] {
                0 => {
                    parent[y] = x;
                    state[y] = 1;
                    stack.push((y, 0));
                }
                1 => {
                    let mut cycle = vec![g.nodes()[y]];
                    let mut at = x;
                    let mut rest = Vec::new();
                    while at != y {
                        rest.push(g.nodes()[at]);
                        at = parent[at];
                    }
                    rest.reverse();
                    cycle.extend(rest);
                    return Some(cycle);
                }
                _ => {}
            }
        }
    }
    None
}

/// One Hamilton path, searching start nodes and neighbors in ascending order.
///
/// Failed `(node, visited-set)` states are memoized, which bounds the search
/// at `n * 2^n` states. Graphs above 64 nodes are not supported.
pub fn hamilton_path(g: &Graph) -> Option<Vec<NodeId>> {
    let n = g.node_count();
    if n == 0 || n > 64 {
        return None;
    }
    if n == 1 {
        return Some(vec![g.nodes()[0]]);
    }
    if !g.is_directed() {
        let comp = g.components();
        if comp.iter().any(|&c| c != 0) {
            return None;
        }
        if (0..n).filter(|&i| g.out_degree(i) <= 1).count() > 2 {
            return None;
        }
    }
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut dead: HashSet<(usize, u64)> = HashSet::new();
    let mut path = Vec::with_capacity(n);

    fn extend(
        g: &Graph,
        cur: usize,
        mask: u64,
        full: u64,
        path: &mut Vec<usize>,
        dead: &mut HashSet<(usize, u64)>,
    ) -> bool {
        if mask == full {
            return true;
        }
        if dead.contains(&(cur, mask)) {
            return false;
        }
        for &next in g.out_indices(cur) {
            if mask & (1 << next) != 0 {
                continue;
            }
            path.push(next);
            if extend(g, next, mask | (1 << next), full, path, dead) {
                return true;
            }
            path.pop();
        }
        dead.insert((cur, mask));
        false
    }

    for start in 0..n {
        path.clear();
        path.push(start);
        if extend(g, start, 1 << start, full, &mut path, &mut dead) {
            return Some(path.iter().map(|&i| g.nodes()[i]).collect());
        }
    }
    None
}

/// Sum of edge costs along `path`, or `None` if some hop is not an edge.
pub fn path_weight(g: &Graph, path: &[NodeId]) -> Option<u64> {
    path.windows(2)
        .map(|w| g.edge_between(w[0], w[1]).map(|e| e.cost()))
        .sum()
}

/// Distances to `target` along edges (reverse Dijkstra).
fn distances_to(g: &Graph, target: usize) -> Vec<Option<u64>> {
    let mut dist = vec![None; g.node_count()];
    let mut heap = BinaryHeap::new();
    dist[target] = Some(0);
    heap.push(Reverse((0u64, target)));
    while let Some(Reverse((d, x))) = heap.pop() {
        if dist[x].is_some_and(|best| d > best) {
            continue;
        }
        for &y in g.in_indices(x) {
            let w = g.edge_between(g.nodes()[y], g.nodes()[x]).map_or(1, |e| e.cost());
            let nd = d + w;
            if dist[y].is_none_or(|old| nd < old) {
                dist[y] = Some(nd);
                heap.push(Reverse((nd, y)));
            }
        }
    }
    dist
}

/// Minimum-weight path from `u` to `v`; among optimal paths, the
/// lexicographically smallest node sequence.
pub fn shortest_path(g: &Graph, u: NodeId, v: NodeId) -> Result<(Vec<NodeId>, u64)> {
    let (s, t) = (g.index_of(u)?, g.index_of(v)?);
    let dist = distances_to(g, t);
    let total = dist[s].ok_or(Error::NoPath(u, v))?;
    let mut path = vec![u];
    let mut cur = s;
    while cur != t {
        let here = dist[cur].unwrap_or(0);
        let next = g
            .out_indices(cur)
            .iter()
            .copied()
            .find(|&y| {
                let w = g.edge_between(g.nodes()[cur], g.nodes()[y]).map_or(1, |e| e.cost());
                dist[y].is_some_and(|d| d + w == here)
            })
            .ok_or(Error::NoPath(u, v))?;
        path.push(g.nodes()[next]);
        cur = next;
    }
    Ok((path, total))
}

/// Nodes with in-degree zero, ascending.
pub fn sources(g: &Graph) -> Vec<NodeId> {
    (0..g.node_count()).filter(|&i| g.in_degree(i) == 0).map(|i| g.nodes()[i]).collect()
}

/// Kahn's algorithm taking the smallest available id first.
pub fn topo_sort(g: &Graph) -> Result<Vec<NodeId>> {
    let n = g.node_count();
    let mut indeg: Vec<usize> = (0..n).map(|i| g.in_degree(i)).collect();
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&i| indeg[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(x)) = ready.pop() {
        order.push(g.nodes()[x]);
        for &y in g.out_indices(x) {
            indeg[y] -= 1;
            if indeg[y] == 0 {
                ready.push(Reverse(y));
            }
        }
    }
    if order.len() < n {
        return Err(Error::NotADag);
    }
    Ok(order)
}

/// Maximum-weight (or maximum-hop, if unweighted) simple path by exhaustive
/// search; ties go to the lexicographically smallest sequence.
pub fn longest_simple_path(g: &Graph, u: NodeId, v: NodeId) -> Result<Vec<NodeId>> {
    let (s, t) = (g.index_of(u)?, g.index_of(v)?);
    if s == t {
        return Ok(vec![u]);
    }
    struct Search<'a> {
        g: &'a Graph,
        t: usize,
        on_path: Vec<bool>,
        path: Vec<usize>,
        best: Option<(u64, Vec<usize>)>,
    }
    impl Search<'_> {
        fn go(&mut self, cur: usize, weight: u64) {
            if cur == self.t {
                // Paths are enumerated in lexicographic order, so only a
                // strictly better one replaces the incumbent.
                if self.best.as_ref().is_none_or(|(w, _)| weight > *w) {
                    self.best = Some((weight, self.path.clone()));
                }
                return;
            }
            for &next in self.g.out_indices(cur) {
                if self.on_path[next] {
                    continue;
                }
                let nodes = self.g.nodes();
                let w = self.g.edge_between(nodes[cur], nodes[next]).map_or(1, |e| e.cost());
                self.on_path[next] = true;
                self.path.push(next);
                self.go(next, weight + w);
                self.path.pop();
                self.on_path[next] = false;
            }
        }
    }
    let mut search = Search {
        g,
        t,
        on_path: vec![false; g.node_count()],
        path: vec![s],
        best: None,
    };
    search.on_path[s] = true;
    search.go(s, 0);
    let (_, best) = search.best.ok_or(Error::NoPath(u, v))?;
    Ok(best.into_iter().map(|i| g.nodes()[i]).collect())
}

fn is_permutation_of_nodes(g: &Graph, nodes: &[NodeId]) -> bool {
    nodes.len() == g.node_count()
        && nodes.iter().all(|n| g.contains(*n))
        && nodes.iter().collect::<HashSet<_>>().len() == nodes.len()
}

/// Whether `parsed` solves `inst`. Accepts any correct answer where a task
/// admits several (Hamilton paths, optimal paths, topological orders).
pub fn validate_answer(inst: &TaskInstance, parsed: &ParsedAnswer) -> Result<bool> {
    let g = &inst.graph;
    let mismatch = || Error::AnswerShapeMismatch(inst.task.to_string());
    if let ParsedAnswer::Unparsed { .. } = parsed {
        return Ok(false);
    }
    match inst.task {
        TaskKind::Connectivity | TaskKind::Cycle => {
            let (ParsedAnswer::YesNo { value }, GoldAnswer::YesNo { value: gold }) = (parsed, &inst.gold)
            else {
                return Err(mismatch());
            };
            Ok(value == gold)
        }
        TaskKind::HamiltonPath => {
            let ParsedAnswer::Path { nodes, .. } = parsed else {
                return Err(mismatch());
            };
            Ok(is_permutation_of_nodes(g, nodes) && path_weight(g, nodes).is_some())
        }
        TaskKind::ShortestPath => {
            let ParsedAnswer::Path { nodes, .. } = parsed else {
                return Err(mismatch());
            };
            let (source, target) = inst.pair().ok_or_else(|| Error::MissingWitness("query pair".into()))?;
            let optimum = match &inst.gold {
                GoldAnswer::Path { weight: Some(w), .. } => *w,
                GoldAnswer::Path { nodes, weight: None } => path_weight(g, nodes).ok_or_else(mismatch)?,
                _ => return Err(mismatch()),
            };
            if nodes.first() != Some(&source) || nodes.last() != Some(&target) {
                return Ok(false);
            }
            Ok(path_weight(g, nodes) == Some(optimum))
        }
        TaskKind::TopoSort => {
            let (ParsedAnswer::Order { nodes } | ParsedAnswer::Path { nodes, .. }) = parsed else {
                return Err(mismatch());
            };
            if !is_permutation_of_nodes(g, nodes) {
                return Ok(false);
            }
            let pos: std::collections::HashMap<NodeId, usize> =
                nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
            Ok(g.edges().iter().all(|e| pos[&e.u] < pos[&e.v]))
        }
        TaskKind::NodeClassification => {
            let (ParsedAnswer::Label { label }, GoldAnswer::Label { label: gold }) = (parsed, &inst.gold) else {
                return Err(mismatch());
            };
            Ok(label.trim() == gold.trim())
        }
    }
}

/// Whether the stored gold answer is actually correct for its graph,
/// recomputed from scratch rather than compared with itself.
pub fn check_gold(inst: &TaskInstance) -> Result<bool> {
    let g = &inst.graph;
    match (inst.task, &inst.gold) {
        (TaskKind::Connectivity, GoldAnswer::YesNo { value }) => {
            let (u, v) = inst.pair().ok_or_else(|| Error::MissingWitness("query pair".into()))?;
            Ok(connected_pair(g, u, v)? == *value)
        }
        (TaskKind::Cycle, GoldAnswer::YesNo { value }) => Ok(find_cycle(g).is_some() == *value),
        (TaskKind::ShortestPath, GoldAnswer::Path { nodes, weight }) => {
            let (u, v) = inst.pair().ok_or_else(|| Error::MissingWitness("query pair".into()))?;
            let (_, best) = shortest_path(g, u, v)?;
            Ok(weight.is_none_or(|w| w == best)
                && validate_answer(inst, &ParsedAnswer::Path { nodes: nodes.clone(), weight: Some(best) })?)
        }
        (TaskKind::NodeClassification, GoldAnswer::Label { label }) => {
            let node = inst.query_node().ok_or_else(|| Error::MissingWitness("query node".into()))?;
            Ok(!label.trim().is_empty() && g.label(node) == Some(crate::graph::QUERY_LABEL))
        }
        _ => validate_answer(inst, &gold_as_parsed(&inst.gold)),
    }
}

/// The gold answer viewed as a parsed response.
pub fn gold_as_parsed(gold: &GoldAnswer) -> ParsedAnswer {
    match gold.clone() {
        GoldAnswer::YesNo { value } => ParsedAnswer::YesNo { value },
        GoldAnswer::Path { nodes, weight } => ParsedAnswer::Path { nodes, weight },
        GoldAnswer::Order { nodes } => ParsedAnswer::Order { nodes },
        GoldAnswer::Label { label } => ParsedAnswer::Label { label },
    }
}

//! Brute-force reference implementations. They only read the raw node and
//! edge lists so they share no logic with the library.

#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use graphdo::{Graph, NodeId};
use itertools::Itertools;

/// Dense adjacency: `w[i][j]` is the cost of the edge i -> j.
pub struct Dense {
    pub n: usize,
    pub ids: Vec<NodeId>,
    pub w: Vec<Vec<Option<u64>>>,
}

impl Dense {
    pub fn of(g: &Graph) -> Self {
        let ids = g.nodes().to_vec();
        let n = ids.len();
        let pos = |x: NodeId| ids.iter().position(|&y| y == x).unwrap();
        let mut w = vec![vec![None; n]; n];
        for e in g.edges() {
            let (a, b) = (pos(e.u), pos(e.v));
            let c = e.weight.map_or(1, u64::from);
            w[a][b] = Some(c);
            if !g.is_directed() {
                w[b][a] = Some(c);
            }
        }
        Dense { n, ids, w }
    }

    pub fn idx(&self, x: NodeId) -> usize {
        self.ids.iter().position(|&y| y == x).unwrap()
    }

    /// Reachability by Warshall's transitive closure.
    pub fn closure(&self) -> Vec<Vec<bool>> {
        let n = self.n;
        let mut r: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j || self.w[i][j].is_some()).collect()).collect();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if r[i][k] && r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
        r
    }

    /// Every simple path starting at `from`, with its total cost.
    pub fn simple_paths(&self, from: usize, visit: &mut dyn FnMut(&[usize], u64)) {
        fn go(d: &Dense, path: &mut Vec<usize>, on: &mut Vec<bool>, cost: u64, visit: &mut dyn FnMut(&[usize], u64)) {
            visit(path, cost);
            let x = *path.last().unwrap();
            for y in 0..d.n {
                if let (Some(c), false) = (d.w[x][y], on[y]) {
                    on[y] = true;
                    path.push(y);
                    go(d, path, on, cost + c, visit);
                    path.pop();
                    on[y] = false;
                }
            }
        }
        let mut on = vec![false; self.n];
        on[from] = true;
        go(self, &mut vec![from], &mut on, 0, visit);
    }

    /// (min cost, max cost) over simple paths from `a` to `b`.
    pub fn path_cost_range(&self, a: usize, b: usize) -> Option<(u64, u64)> {
        let mut best: Option<(u64, u64)> = None;
        self.simple_paths(a, &mut |p, c| {
            if *p.last().unwrap() == b && p.len() > 1 {
                best = Some(best.map_or((c, c), |(lo, hi)| (lo.min(c), hi.max(c))));
            }
        });
        best
    }

    /// Hamilton path existence by trying every node permutation.
    pub fn hamilton_by_permutation(&self) -> bool {
        if self.n <= 1 {
            return self.n == 1;
        }
        (0..self.n).permutations(self.n).any(|p| p.windows(2).all(|w| self.w[w[0]][w[1]].is_some()))
    }

    pub fn is_path(&self, nodes: &[NodeId]) -> bool {
        nodes.windows(2).all(|w| self.w[self.idx(w[0])][self.idx(w[1])].is_some())
    }

    pub fn cost(&self, nodes: &[NodeId]) -> Option<u64> {
        nodes.windows(2).map(|w| self.w[self.idx(w[0])][self.idx(w[1])]).sum()
    }
}

/// Undirected cycle presence: some component has at least as many edges
/// as nodes.
pub fn has_cycle_by_count(g: &Graph) -> bool {
    let d = Dense::of(g);
    let reach = d.closure();
    let mut comps: BTreeSet<Vec<usize>> = BTreeSet::new();
    for i in 0..d.n {
        comps.insert((0..d.n).filter(|&j| reach[i][j]).collect());
    }
    comps.iter().any(|c| {
        let edges = g.edges().iter().filter(|e| c.contains(&d.idx(e.u))).count();
        edges >= c.len()
    })
}

pub fn is_topological(g: &Graph, order: &[NodeId]) -> bool {
    let set: BTreeSet<_> = order.iter().collect();
    if order.len() != g.node_count() || set.len() != order.len() {
        return false;
    }
    let pos = |x: NodeId| order.iter().position(|&y| y == x);
    g.edges().iter().all(|e| match (pos(e.u), pos(e.v)) {
        (Some(a), Some(b)) => a < b,
        _ => false,
    })
}

/// Line-graph adjacency over `g.edges()` indices, ascending.
pub fn line_adj(g: &Graph) -> Vec<Vec<usize>> {
    let es = g.edges();
    (0..es.len())
        .map(|i| {
            (0..es.len())
                .filter(|&j| j != i && [es[j].u, es[j].v].iter().any(|x| *x == es[i].u || *x == es[i].v))
                .collect()
        })
        .collect()
}

/// Reference BFS over the line graph from the given roots in turn (roots
/// already reached are skipped).
pub fn line_bfs(adj: &[Vec<usize>], roots: &[usize]) -> Vec<(usize, usize)> {
    let mut seen = vec![false; adj.len()];
    let mut out = vec![];
    for &r in roots {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        let mut q = VecDeque::from([(r, 0)]);
        while let Some((e, d)) = q.pop_front() {
            out.push((e, d));
            for &f in &adj[e] {
                if !seen[f] {
                    seen[f] = true;
                    q.push_back((f, d + 1));
                }
            }
        }
    }
    out
}

/// Reference recursive DFS over the line graph from the given roots.
pub fn line_dfs(adj: &[Vec<usize>], roots: &[usize]) -> Vec<usize> {
    fn go(adj: &[Vec<usize>], e: usize, seen: &mut Vec<bool>, out: &mut Vec<usize>) {
        seen[e] = true;
        out.push(e);
        for &f in &adj[e] {
            if !seen[f] {
                go(adj, f, seen, out);
            }
        }
    }
    let mut seen = vec![false; adj.len()];
    let mut out = vec![];
    for &r in roots {
        if !seen[r] {
            go(adj, r, &mut seen, &mut out);
        }
    }
    out
}

/// Roots of a traversal: every emitted edge not adjacent to any edge
/// emitted before it in the same component must start a new component.
pub fn component_roots(adj: &[Vec<usize>], seq: &[usize]) -> Vec<usize> {
    let mut comp = vec![usize::MAX; adj.len()];
    let mut next = 0;
    for s in 0..adj.len() {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut q = VecDeque::from([s]);
        comp[s] = next;
        while let Some(e) = q.pop_front() {
            for &f in &adj[e] {
                if comp[f] == usize::MAX {
                    comp[f] = next;
                    q.push_back(f);
                }
            }
        }
        next += 1;
    }
    let mut started = BTreeSet::new();
    seq.iter().filter(|&&e| started.insert(comp[e])).copied().collect()
}

/// Canonical edge key: sorted endpoints unless directed.
pub fn key(g: &Graph, u: NodeId, v: NodeId) -> (NodeId, NodeId) {
    if g.is_directed() || u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Whether `seq` is a permutation of `g.edges()` (as canonical keys).
pub fn is_edge_permutation(g: &Graph, seq: &[graphdo::Edge]) -> bool {
    let mut a: Vec<_> = seq.iter().map(|e| (key(g, e.u, e.v), e.weight)).collect();
    let mut b: Vec<_> = g.edges().iter().map(|e| (key(g, e.u, e.v), e.weight)).collect();
    a.sort();
    b.sort();
    a == b
}

/// Index of each sequence edge in `g.edges()`.
pub fn edge_indices(g: &Graph, seq: &[graphdo::Edge]) -> Vec<usize> {
    seq.iter()
        .map(|e| g.edges().iter().position(|f| key(g, f.u, f.v) == key(g, e.u, e.v)).unwrap())
        .collect()
}

/// For every target, (min cost, max cost) over simple paths from `from`.
pub fn cost_table(d: &Dense, from: usize) -> Vec<Option<(u64, u64)>> {
    let mut t: Vec<Option<(u64, u64)>> = vec![None; d.n];
    d.simple_paths(from, &mut |p, c| {
        let b = *p.last().unwrap();
        t[b] = Some(t[b].map_or((c, c), |(lo, hi)| (lo.min(c), hi.max(c))));
    });
    t
}

/// Minimal HTTP/1.1 server answering every POST with `reply(body)`.
/// Returns the base URL; the server lives until the process exits.
pub fn serve(reply: impl Fn(&str) -> (u16, String) + Send + Sync + 'static) -> String {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::Arc;

    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let reply = Arc::new(reply);
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { continue };
            let reply = reply.clone();
            std::thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut out = stream;
                loop {
                    let mut len = 0usize;
                    let mut first = true;
                    loop {
                        let mut line = String::new();
                        if reader.read_line(&mut line).unwrap_or(0) == 0 {
                            return;
                        }
                        let t = line.trim_end();
                        if t.is_empty() && !first {
                            break;
                        }
                        first = false;
                        if let Some((k, v)) = t.split_once(':') {
                            if k.eq_ignore_ascii_case("content-length") {
                                len = v.trim().parse().unwrap_or(0);
                            }
                        }
                    }
                    let mut body = vec![0; len];
                    if reader.read_exact(&mut body).is_err() {
                        return;
                    }
                    let (status, text) = reply(&String::from_utf8_lossy(&body));
                    let head = format!(
                        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n",
                        text.len()
                    );
                    if out.write_all(head.as_bytes()).and_then(|_| out.write_all(text.as_bytes())).is_err() {
                        return;
                    }
                }
            });
        }
    });
    format!("http://{addr}")
}

/// Chat-completion response body carrying `text`.
pub fn completion(text: &str) -> String {
    serde_json::json!({ "choices": [{ "message": { "role": "assistant", "content": text } }] }).to_string()
}

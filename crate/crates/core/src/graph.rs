//! Undirected simple graphs and the two graph families used by the tasks:
//! bridge graphs and plain paths.
//!
//! Path lengths are counted in edges throughout: a length-`k` path has
//! `k + 1` vertices, `k - 1` of them interior.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("vertex {vertex} out of range for a graph with {vertex_count} vertices")]
    VertexOutOfRange { vertex: usize, vertex_count: usize },
    #[error("invalid bridge spec: {0}")]
    InvalidBridge(String),
    #[error("path length must be at least 1")]
    EmptyPath,
    #[error("malformed edge list at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Undirected simple graph on vertices `0..vertex_count`.
///
/// `edges` keeps insertion order (the order a task presents them in);
/// `adjacency` holds each vertex's neighbours sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(vertex_count: usize) -> Self {
        Graph {
            vertex_count,
            edges: Vec::new(),
            adjacency: vec![Vec::new(); vertex_count],
        }
    }

    pub fn from_edges<I>(vertex_count: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Graph::new(vertex_count);
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<(), GraphError> {
        self.check(u)?;
        self.check(v)?;
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        let pos_u = match self.adjacency[u].binary_search(&v) {
            Ok(_) => return Err(GraphError::DuplicateEdge(u, v)),
            Err(p) => p,
        };
        self.adjacency[u].insert(pos_u, v);
        let pos_v = self.adjacency[v].binary_search(&u).expect_err("adjacency out of sync");
        self.adjacency[v].insert(pos_v, u);
        self.edges.push((u, v));
        Ok(())
    }

    fn check(&self, v: usize) -> Result<(), GraphError> {
        if v < self.vertex_count {
            Ok(())
        } else {
            Err(GraphError::VertexOutOfRange {
                vertex: v,
                vertex_count: self.vertex_count,
            })
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> Result<&[usize], GraphError> {
        self.check(v)?;
        Ok(&self.adjacency[v])
    }

    /// Neighbour list for a vertex known to be in range.
    pub(crate) fn adj(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> Result<usize, GraphError> {
        self.neighbors(v).map(<[usize]>::len)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.vertex_count && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// BFS distances (in edges) from `source`; `None` for unreachable vertices.
    pub fn distances_from(&self, source: usize) -> Result<Vec<Option<usize>>, GraphError> {
        self.check(source)?;
        let mut dist = vec![None; self.vertex_count];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or_default();
            for &w in &self.adjacency[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        Ok(dist)
    }

    pub fn connected(&self, u: usize, v: usize) -> Result<bool, GraphError> {
        self.check(v)?;
        Ok(self.distances_from(u)?[v].is_some())
    }

    /// Minimum-edge path from `u` to `v`, expanding neighbours smallest label
    /// first so ties resolve deterministically. `None` when disconnected.
    pub fn shortest_path(&self, u: usize, v: usize) -> Result<Option<Vec<usize>>, GraphError> {
        self.check(u)?;
        self.check(v)?;
        let mut parent = vec![usize::MAX; self.vertex_count];
        parent[u] = u;
        let mut queue = VecDeque::from([u]);
        while let Some(x) = queue.pop_front() {
            if x == v {
                break;
            }
            for &w in &self.adjacency[x] {
                if parent[w] == usize::MAX {
                    parent[w] = x;
                    queue.push_back(w);
                }
            }
        }
        if parent[v] == usize::MAX {
            return Ok(None);
        }
        let mut path = vec![v];
        let mut cur = v;
        while cur != u {
            cur = parent[cur];
            path.push(cur);
        }
        path.reverse();
        Ok(Some(path))
    }

    /// Applies `perm` (old label -> new label) to every vertex, keeping the
    /// edge order and each edge's orientation.
    pub fn relabel(&self, perm: &[usize]) -> Graph {
        assert_eq!(perm.len(), self.vertex_count, "permutation size mismatch");
        let mut g = Graph::new(self.vertex_count);
        for &(u, v) in &self.edges {
            g.add_edge(perm[u], perm[v])
                .expect("relabeling by a bijection preserves simplicity");
        }
        g
    }

    /// Same graph with edges listed as `order[0], order[1], ...`.
    pub fn reorder_edges(&self, order: &[usize]) -> Graph {
        assert_eq!(order.len(), self.edges.len(), "edge order size mismatch");
        let mut g = Graph::new(self.vertex_count);
        for &i in order {
            let (u, v) = self.edges[i];
            g.add_edge(u, v).expect("reordering preserves simplicity");
        }
        g
    }

    /// Debug serialization: header `V E`, then one `u v` line per edge.
    pub fn to_edge_list_text(&self) -> String {
        let mut out = format!("{} {}\n", self.vertex_count, self.edges.len());
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    pub fn from_edge_list_text(text: &str) -> Result<Graph, GraphError> {
        let parse_pair = |line_no: usize, line: &str| -> Result<(usize, usize), GraphError> {
            let bad = |reason: &str| GraphError::Parse {
                line: line_no,
                reason: reason.to_string(),
            };
            let mut it = line.split_whitespace();
            let a = it.next().ok_or_else(|| bad("missing field"))?;
            let b = it.next().ok_or_else(|| bad("missing field"))?;
            if it.next().is_some() {
                return Err(bad("trailing field"));
            }
            let a = a.parse().map_err(|_| bad("not an integer"))?;
            let b = b.parse().map_err(|_| bad("not an integer"))?;
            Ok((a, b))
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            reason: "missing header".into(),
        })?;
        let (n, m) = parse_pair(hl + 1, header)?;
        let mut g = Graph::new(n);
        for (i, line) in lines {
            let (u, v) = parse_pair(i + 1, line)?;
            g.add_edge(u, v)?;
        }
        if g.edge_count() != m {
            return Err(GraphError::Parse {
                line: hl + 1,
                reason: format!("header says {m} edges, found {}", g.edge_count()),
            });
        }
        Ok(g)
    }
}

/// Parameters of a bridge graph. `depth` is the number of segments; each
/// segment joins two consecutive intersections by a `short` and a `long`
/// path, and every intersection except the last carries a `deadend` path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BridgeSpec {
    pub depth: usize,
    pub short: usize,
    pub long: usize,
    pub deadend: usize,
}

impl BridgeSpec {
    pub fn new(depth: usize, short: usize, long: usize, deadend: usize) -> Result<Self, GraphError> {
        let spec = BridgeSpec {
            depth,
            short,
            long,
            deadend,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `Bridge(d, 3, 5, 3)`, the family used for the trained-model experiments.
    pub fn standard(depth: usize) -> Self {
        BridgeSpec {
            depth,
            short: 3,
            long: 5,
            deadend: 3,
        }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.depth == 0 {
            return Err(GraphError::InvalidBridge("depth must be at least 1".into()));
        }
        if self.short == 0 {
            return Err(GraphError::InvalidBridge("short must be at least 1".into()));
        }
        if self.long <= self.short {
            return Err(GraphError::InvalidBridge(format!(
                "long ({}) must exceed short ({})",
                self.long, self.short
            )));
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        let d = self.depth;
        (d + 1) + d * (self.short + self.long - 2) + d * self.deadend
    }

    pub fn edge_count(&self) -> usize {
        self.depth * (self.short + self.long + self.deadend)
    }
}

impl fmt::Display for BridgeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "bridge({},{},{},{})",
            self.depth, self.short, self.long, self.deadend
        )
    }
}

/// Interior vertices of one segment, each listed from `v_i` towards `v_{i+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Segment {
    pub short: Vec<usize>,
    pub long: Vec<usize>,
}

/// Structural roles of the vertices of one bridge graph or path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoleMap {
    pub start: usize,
    pub end: usize,
    /// `v_1 .. v_{d+1}`; `[start, end]` for a plain path.
    pub intersections: Vec<usize>,
    /// A plain path is one segment whose `long` list is empty.
    pub segments: Vec<Segment>,
    /// Deadend vertices per intersection `v_1 .. v_d`, head to tip.
    pub deadends: Vec<Vec<usize>>,
}

impl RoleMap {
    pub fn relabel(&self, f: impl Fn(usize) -> usize) -> RoleMap {
        let map = |xs: &[usize]| xs.iter().map(|&x| f(x)).collect::<Vec<_>>();
        RoleMap {
            start: f(self.start),
            end: f(self.end),
            intersections: map(&self.intersections),
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    short: map(&s.short),
                    long: map(&s.long),
                })
                .collect(),
            deadends: self.deadends.iter().map(|d| map(d)).collect(),
        }
    }

    /// Start-to-end route through every segment's short path.
    pub fn short_route(&self) -> Vec<usize> {
        let mut route = vec![self.start];
        for (i, seg) in self.segments.iter().enumerate() {
            route.extend_from_slice(&seg.short);
            route.push(self.intersections[i + 1]);
        }
        route
    }

    /// Every vertex carrying a role, each exactly once.
    pub fn all_vertices(&self) -> Vec<usize> {
        let mut out = self.intersections.clone();
        for s in &self.segments {
            out.extend_from_slice(&s.short);
            out.extend_from_slice(&s.long);
        }
        for d in &self.deadends {
            out.extend_from_slice(d);
        }
        out
    }
}

fn add_path(g: &mut Graph, from: usize, interior: &[usize], to: Option<usize>) {
    let mut prev = from;
    for &x in interior.iter().chain(to.iter()) {
        g.add_edge(prev, x).expect("bridge construction never repeats an edge");
        prev = x;
    }
}

/// Builds a bridge graph with canonical labels: intersections `0..=d`,
/// then for each segment its short interior followed by its long interior,
/// then the deadend vertices of `v_1 .. v_d` in order.
pub fn build_bridge(spec: BridgeSpec) -> Result<(Graph, RoleMap), GraphError> {
    spec.validate()?;
    let d = spec.depth;
    let intersections: Vec<usize> = (0..=d).collect();
    let mut next = d + 1;
    let mut take = |k: usize| {
        let v: Vec<usize> = (next..next + k).collect();
        next += k;
        v
    };
    let segments: Vec<Segment> = (0..d)
        .map(|_| Segment {
            short: take(spec.short - 1),
            long: take(spec.long - 1),
        })
        .collect();
    let deadends: Vec<Vec<usize>> = (0..d).map(|_| take(spec.deadend)).collect();
    let n = next;
    debug_assert_eq!(n, spec.vertex_count());

    let mut g = Graph::new(n);
    for (i, seg) in segments.iter().enumerate() {
        add_path(&mut g, intersections[i], &seg.short, Some(intersections[i + 1]));
        add_path(&mut g, intersections[i], &seg.long, Some(intersections[i + 1]));
    }
    for (i, dead) in deadends.iter().enumerate() {
        debug_assert!(dead.iter().all(|&x| x > d), "deadend collides with an intersection");
        add_path(&mut g, intersections[i], dead, None);
    }
    debug_assert_eq!(g.edge_count(), spec.edge_count());

    let roles = RoleMap {
        start: 0,
        end: d,
        intersections,
        segments,
        deadends,
    };
    Ok((g, roles))
}

/// Path with `len` edges labelled `0..=len` in order.
pub fn build_path(len: usize) -> Result<(Graph, RoleMap), GraphError> {
    if len == 0 {
        return Err(GraphError::EmptyPath);
    }
    let g = Graph::from_edges(len + 1, (0..len).map(|i| (i, i + 1)))?;
    let roles = RoleMap {
        start: 0,
        end: len,
        intersections: vec![0, len],
        segments: vec![Segment {
            short: (1..len).collect(),
            long: Vec::new(),
        }],
        deadends: Vec::new(),
    };
    Ok((g, roles))
}

/// Two graphs side by side; the second one's labels are shifted by `offset`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisjointUnion {
    pub graph: Graph,
    pub offset: usize,
}

impl DisjointUnion {
    /// 0 for vertices of the first operand, 1 for the second.
    pub fn component_of(&self, v: usize) -> usize {
        usize::from(v >= self.offset)
    }
}

pub fn disjoint_union(g1: &Graph, g2: &Graph) -> DisjointUnion {
    let offset = g1.vertex_count();
    let mut g = Graph::new(offset + g2.vertex_count());
    for &(u, v) in g1.edges() {
        g.add_edge(u, v).expect("operand is simple");
    }
    for &(u, v) in g2.edges() {
        g.add_edge(u + offset, v + offset).expect("operand is simple");
    }
    DisjointUnion { graph: g, offset }
}

// SPDX-License-Identifier: Apache-2.0

//! Weighted undirected graphs, exact shortest distances and hop utilities.
//!
//! Edge weights are the private data; the topology is public. Everything in
//! this module is deterministic.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

pub type Vertex = usize;
pub type EdgeId = usize;

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("vertex {vertex} out of range for a graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self-loop on vertex {0}")]
    SelfLoop(Vertex),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(Vertex, Vertex),
    #[error("edge {{{u}, {v}}} has invalid weight {w}")]
    InvalidWeight { u: Vertex, v: Vertex, w: f64 },
    #[error("edge {{{u}, {v}}} has weight {w} above the declared cap {cap}")]
    AboveCap { u: Vertex, v: Vertex, w: f64, cap: f64 },
    #[error("no edge between {0} and {1}")]
    MissingEdge(Vertex, Vertex),
    #[error("edit delta {0} exceeds 1 in magnitude")]
    DeltaTooLarge(f64),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An undirected edge, stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: Vertex,
    pub v: Vertex,
    pub w: f64,
}

impl Edge {
    pub fn other(&self, x: Vertex) -> Vertex {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Undirected graph on vertices `0..n` with nonnegative edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(Vertex, EdgeId)>>,
    index: HashMap<(Vertex, Vertex), EdgeId>,
    weight_cap: Option<f64>,
}

fn ordered(u: Vertex, v: Vertex) -> (Vertex, Vertex) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl WeightedGraph {
    /// Builds a graph, rejecting self-loops, duplicate pairs, negative or
    /// non-finite weights and weights above `weight_cap`.
    pub fn new<I>(n: usize, edges: I, weight_cap: Option<f64>) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (Vertex, Vertex, f64)>,
    {
        if let Some(cap) = weight_cap {
            if !(cap.is_finite() && cap > 0.0) {
                return Err(GraphError::Parse {
                    line: 0,
                    msg: format!("weight cap must be positive and finite, got {cap}"),
                });
            }
        }
        let mut g = WeightedGraph {
            n,
            edges: Vec::new(),
            adjacency: vec![Vec::new(); n],
            index: HashMap::new(),
            weight_cap,
        };
        for (u, v, w) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: x, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(GraphError::InvalidWeight { u, v, w });
            }
            if let Some(cap) = weight_cap {
                if w > cap {
                    return Err(GraphError::AboveCap { u, v, w, cap });
                }
            }
            let key = ordered(u, v);
            if g.index.contains_key(&key) {
                return Err(GraphError::DuplicateEdge(key.0, key.1));
            }
            let id = g.edges.len();
            g.edges.push(Edge { u: key.0, v: key.1, w });
            g.index.insert(key, id);
            g.adjacency[u].push((v, id));
            g.adjacency[v].push((u, id));
        }
        for list in &mut g.adjacency {
            list.sort_unstable();
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn weight(&self, id: EdgeId) -> f64 {
        self.edges[id].w
    }

    /// Neighbors of `v` with the connecting edge id, sorted by neighbor.
    pub fn neighbors(&self, v: Vertex) -> &[(Vertex, EdgeId)] {
        &self.adjacency[v]
    }

    pub fn edge_id(&self, u: Vertex, v: Vertex) -> Option<EdgeId> {
        self.index.get(&ordered(u, v)).copied()
    }

    pub fn weight_cap(&self) -> Option<f64> {
        self.weight_cap
    }

    /// Same topology, new weight vector (indexed by edge id) and cap.
    pub fn with_weights(&self, weights: &[f64], weight_cap: Option<f64>) -> Result<Self, GraphError> {
        assert_eq!(weights.len(), self.edges.len(), "weight vector length mismatch");
        WeightedGraph::new(
            self.n,
            self.edges.iter().zip(weights).map(|(e, &w)| (e.u, e.v, w)),
            weight_cap,
        )
    }

    /// Parses the `n m W` header followed by `m` lines of `u v w`.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line_no, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(GraphError::Parse {
                line: line_no,
                msg: format!("expected `n m W`, got `{header}`"),
            });
        }
        let n: usize = parse_field(fields[0], line_no)?;
        let m: usize = parse_field(fields[1], line_no)?;
        let cap: f64 = parse_field(fields[2], line_no)?;
        let cap = if cap == 0.0 { None } else { Some(cap) };
        let mut edges = Vec::with_capacity(m);
        for (line_no, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(GraphError::Parse {
                    line: line_no,
                    msg: format!("expected `u v w`, got `{line}`"),
                });
            }
            edges.push((
                parse_field::<usize>(f[0], line_no)?,
                parse_field::<usize>(f[1], line_no)?,
                parse_field::<f64>(f[2], line_no)?,
            ));
        }
        if edges.len() != m {
            return Err(GraphError::Parse {
                line: 1,
                msg: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        WeightedGraph::new(n, edges, cap)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.n, self.edges.len(), self.weight_cap.unwrap_or(0.0));
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {}", e.u, e.v, e.w);
        }
        out
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn check_vertex(&self, v: Vertex) -> Result<(), GraphError> {
        if v < self.n {
            Ok(())
        } else {
            Err(GraphError::VertexOutOfRange { vertex: v, n: self.n })
        }
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, GraphError> {
    s.parse().map_err(|_| GraphError::Parse {
        line,
        msg: format!("cannot parse `{s}`"),
    })
}

/// Square matrix of distances, `f64::INFINITY` for disconnected pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn filled(n: usize, value: f64) -> Self {
        DistanceMatrix {
            n,
            data: vec![value; n * n],
        }
    }

    pub fn from_rows(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n);
        DistanceMatrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Largest `|a - b|` over all entries; entries that are both infinite
    /// count as equal, a finite/infinite mismatch is infinite.
    pub fn max_abs_diff(&self, other: &DistanceMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| abs_diff(a, b))
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// CSV rows with `inf` for infinity.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.data.len() * 8);
        for i in 0..self.n {
            for (j, &v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                push_f64(&mut out, v);
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn abs_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

/// Formats a float for CSV output using `inf` for infinity. The `Display`
/// output of `f64` round-trips exactly.
pub fn push_f64(out: &mut String, v: f64) {
    if v == f64::INFINITY {
        out.push_str("inf");
    } else {
        let _ = write!(out, "{v}");
    }
}

pub fn parse_f64(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" => Some(f64::INFINITY),
        other => other.parse().ok(),
    }
}

/// Compact adjacency with local indices `0..len` and weights copied from
/// the owning graph.
#[derive(Debug, Clone)]
pub(crate) struct LocalGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl LocalGraph {
    pub(crate) fn from_graph(g: &WeightedGraph) -> Self {
        let mut offsets = Vec::with_capacity(g.n + 1);
        let mut targets = Vec::with_capacity(2 * g.edge_count());
        let mut weights = Vec::with_capacity(2 * g.edge_count());
        offsets.push(0);
        for v in 0..g.n {
            for &(u, id) in g.neighbors(v) {
                targets.push(u);
                weights.push(g.weight(id));
            }
            offsets.push(targets.len());
        }
        LocalGraph {
            offsets,
            targets,
            weights,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub(crate) fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        self.targets[range.clone()].iter().copied().zip(self.weights[range].iter().copied())
    }

    pub(crate) fn dijkstra(&self, src: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(HeapItem(0.0, src));
        while let Some(HeapItem(d, v)) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for (u, w) in self.neighbors(v) {
                let nd = d + w;
                if nd < dist[u] {
                    dist[u] = nd;
                    heap.push(HeapItem(nd, u));
                }
            }
        }
        dist
    }

    /// Unweighted BFS hop counts, `usize::MAX` beyond `limit` or unreachable.
    pub(crate) fn bfs(&self, src: usize, limit: usize) -> Vec<usize> {
        self.multi_bfs(&[src], limit).0
    }

    /// BFS from several sources at once. Returns hop counts and, for every
    /// reached vertex, the index into `sources` of its nearest source (ties
    /// go to the earlier source).
    pub(crate) fn multi_bfs(&self, sources: &[usize], limit: usize) -> (Vec<usize>, Vec<usize>) {
        let mut hops = vec![usize::MAX; self.len()];
        let mut owner = vec![usize::MAX; self.len()];
        let mut queue = VecDeque::new();
        for (i, &s) in sources.iter().enumerate() {
            if hops[s] == usize::MAX {
                hops[s] = 0;
                owner[s] = i;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            if hops[v] >= limit {
                continue;
            }
            for (u, _) in self.neighbors(v) {
                if hops[u] == usize::MAX {
                    hops[u] = hops[v] + 1;
                    owner[u] = owner[v];
                    queue.push_back(u);
                }
            }
        }
        (hops, owner)
    }

    /// Connected components as sorted lists of local indices, ordered by
    /// their smallest member.
    pub(crate) fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for s in 0..self.len() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut i = 0;
            while i < comp.len() {
                let v = comp[i];
                i += 1;
                for (u, _) in self.neighbors(v) {
                    if !seen[u] {
                        seen[u] = true;
                        comp.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// A vertex subset together with an explicit edge subset of a parent graph.
///
/// Used for the decomposition-tree subgraphs, whose edge sets are not
/// always induced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgraph {
    vertices: Vec<Vertex>,
    edges: Vec<EdgeId>,
}

impl Subgraph {
    /// Induced subgraph on `vertices` (deduplicated and sorted).
    pub fn induced(g: &WeightedGraph, vertices: &[Vertex]) -> Result<Self, GraphError> {
        let mut vs = vertices.to_vec();
        vs.sort_unstable();
        vs.dedup();
        for &v in &vs {
            g.check_vertex(v)?;
        }
        let mut member = vec![false; g.n()];
        for &v in &vs {
            member[v] = true;
        }
        let edges = g
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, e)| member[e.u] && member[e.v])
            .map(|(id, _)| id)
            .collect();
        Ok(Subgraph { vertices: vs, edges })
    }

    pub fn full(g: &WeightedGraph) -> Self {
        Subgraph {
            vertices: (0..g.n()).collect(),
            edges: (0..g.edge_count()).collect(),
        }
    }

    /// Caller guarantees both lists are sorted and every edge has both
    /// endpoints in `vertices`.
    pub fn from_parts(vertices: Vec<Vertex>, edges: Vec<EdgeId>) -> Self {
        debug_assert!(vertices.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        Subgraph { vertices, edges }
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn local_index(&self, v: Vertex) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.local_index(v).is_some()
    }

    /// Restriction to `subset` keeping only edges of this subgraph.
    pub fn restrict(&self, g: &WeightedGraph, subset: &[Vertex]) -> Subgraph {
        let mut vs: Vec<Vertex> = subset.iter().copied().filter(|&v| self.contains(v)).collect();
        vs.sort_unstable();
        vs.dedup();
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|&id| {
                let e = g.edge(id);
                vs.binary_search(&e.u).is_ok() && vs.binary_search(&e.v).is_ok()
            })
            .collect();
        Subgraph { vertices: vs, edges }
    }

    pub(crate) fn local_graph(&self, g: &WeightedGraph) -> LocalGraph {
        let k = self.vertices.len();
        let mut lists: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
        for &id in &self.edges {
            let e = g.edge(id);
            let (a, b) = (
                self.local_index(e.u).expect("edge endpoint outside subgraph"),
                self.local_index(e.v).expect("edge endpoint outside subgraph"),
            );
            lists[a].push((b, e.w));
            lists[b].push((a, e.w));
        }
        let mut offsets = Vec::with_capacity(k + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for mut list in lists {
            list.sort_by(|x, y| x.0.cmp(&y.0));
            for (t, w) in list {
                targets.push(t);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        LocalGraph {
            offsets,
            targets,
            weights,
        }
    }

    /// Connected components as sorted global vertex lists.
    pub fn components(&self, g: &WeightedGraph) -> Vec<Vec<Vertex>> {
        self.local_graph(g)
            .components()
            .into_iter()
            .map(|c| c.into_iter().map(|i| self.vertices[i]).collect())
            .collect()
    }

    /// All-pairs distances inside this subgraph, indexed by local position.
    pub fn apsd(&self, g: &WeightedGraph) -> DistanceMatrix {
        let lg = self.local_graph(g);
        let k = self.len();
        all_sources(&lg, k)
    }
}

/// Distances over a vertex subset, addressed by global vertex id.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDistances {
    pub vertices: Vec<Vertex>,
    pub matrix: DistanceMatrix,
}

impl LocalDistances {
    pub fn get(&self, u: Vertex, v: Vertex) -> Option<f64> {
        let i = self.vertices.binary_search(&u).ok()?;
        let j = self.vertices.binary_search(&v).ok()?;
        Some(self.matrix.get(i, j))
    }
}

/// Exact all-pairs shortest distances (Dijkstra from every source).
pub fn exact_apsd(g: &WeightedGraph) -> DistanceMatrix {
    all_sources(&LocalGraph::from_graph(g), g.n())
}

/// Dijkstra from every source. The two directions of a pair can differ in
/// the last bit because the sums run in opposite orders, so the lower
/// triangle is copied from the upper one to make the matrix exactly
/// symmetric.
fn all_sources(lg: &LocalGraph, n: usize) -> DistanceMatrix {
    let mut data = Vec::with_capacity(n * n);
    for s in 0..n {
        data.extend(lg.dijkstra(s));
    }
    for i in 0..n {
        for j in 0..i {
            data[i * n + j] = data[j * n + i];
        }
    }
    DistanceMatrix::from_rows(n, data)
}

/// Exact distances inside the subgraph induced by `vertices`.
pub fn exact_subgraph_apsd(g: &WeightedGraph, vertices: &[Vertex]) -> Result<LocalDistances, GraphError> {
    let sub = Subgraph::induced(g, vertices)?;
    let matrix = sub.apsd(g);
    Ok(LocalDistances {
        vertices: sub.vertices,
        matrix,
    })
}

/// Vertices within `k` unweighted hops of `src`, sorted.
pub fn hop_ball(g: &WeightedGraph, src: Vertex, k: usize) -> Vec<Vertex> {
    let hops = LocalGraph::from_graph(g).bfs(src, k);
    (0..g.n()).filter(|&v| hops[v] <= k).collect()
}

/// A weight-level neighboring edit: one edge changes by at most one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborEdit {
    pub u: Vertex,
    pub v: Vertex,
    pub delta: f64,
}

pub fn make_neighbor(g: &WeightedGraph, edit: NeighborEdit) -> Result<WeightedGraph, GraphError> {
    if !(edit.delta.abs() <= 1.0) {
        return Err(GraphError::DeltaTooLarge(edit.delta));
    }
    let id = g.edge_id(edit.u, edit.v).ok_or(GraphError::MissingEdge(edit.u, edit.v))?;
    let mut weights: Vec<f64> = g.edges().iter().map(|e| e.w).collect();
    weights[id] += edit.delta;
    g.with_weights(&weights, g.weight_cap())
}

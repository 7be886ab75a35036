// SPDX-License-Identifier: Apache-2.0

//! Separator strategies and the binary decomposition tree.
//!
//! Every internal node `b` holds a subgraph `G_b` and a separator `S_b`.
//! Removing `S_b` splits `G_b` into two sides `V'_0`, `V'_1` with no edge
//! between them, and the children are
//! `G_{b∘a} = (V'_a ∪ S_b, E(V'_a ∪ S_b) \ E(S_b))`: the separator joins both
//! children but the edges inside it do not. Construction only looks at the
//! topology, never at the weights.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::graph::{EdgeId, GraphError, LocalGraph, Subgraph, Vertex, WeightedGraph};
use crate::treedec::TreeDecomposition;

#[derive(Debug, thiserror::Error)]
pub enum DecompError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid decomposition parameters: {0}")]
    InvalidParams(String),
    #[error("empty scope")]
    EmptyScope,
    #[error("strategy {strategy} is inapplicable: {reason}")]
    StrategyInapplicable { strategy: &'static str, reason: String },
    #[error("no separator within the size cap p = {cap} (smallest balanced candidate has {smallest} vertices)")]
    CapExceeded { cap: usize, smallest: usize },
    #[error("strategy {strategy} found no balanced separator for a scope of {size} vertices")]
    Unbalanced { strategy: &'static str, size: usize },
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Separation parameters `(p, q, q′)` plus the leaf size `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Separator size cap; `usize::MAX` means uncapped.
    pub p: usize,
    pub q: f64,
    pub q_prime: f64,
    pub c: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            p: usize::MAX,
            q: 2.0 / 3.0,
            q_prime: 0.75,
            c: 4,
        }
    }
}

impl TreeParams {
    pub fn with_leaf_size(c: usize) -> Self {
        TreeParams {
            c,
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<(), DecompError> {
        if !(self.q > 0.0 && self.q < self.q_prime && self.q_prime < 1.0) {
            return Err(DecompError::InvalidParams(format!(
                "need 0 < q < q' < 1, got q = {}, q' = {}",
                self.q, self.q_prime
            )));
        }
        if self.c < 2 {
            return Err(DecompError::InvalidParams(
                "leaf size c must be at least 2: a separator joins both children, so an edge cannot be split".into(),
            ));
        }
        if self.p == 0 {
            return Err(DecompError::InvalidParams("separator cap p must be at least 1".into()));
        }
        Ok(())
    }

    /// Largest admissible component left by a separator of `n` vertices:
    /// `q·n`, but never below `c`, since a piece that already fits in a
    /// leaf needs no further balance.
    pub fn component_limit(&self, n: usize) -> f64 {
        (self.q * n as f64).max(self.c as f64)
    }

    /// Largest admissible child `V'_a ∪ S`: `q′·n`, but never below `c`.
    /// Without the floor, small pieces such as a path on `c + 1` vertices
    /// could never be split.
    pub fn child_limit(&self, n: usize) -> f64 {
        (self.q_prime * n as f64).max(self.c as f64)
    }

    /// `h = max(1, ⌈log_{1/q′}(n/c)⌉)`.
    pub fn depth_bound(&self, n: usize) -> usize {
        if n <= self.c {
            return 1;
        }
        let h = ((n as f64 / self.c as f64).ln() / (1.0 / self.q_prime).ln() - 1e-9).ceil();
        (h as usize).max(1)
    }
}

/// How separators are searched for. All strategies are validated against
/// the balance bounds after the fact, so a strategy can only fail loudly.
#[derive(Debug, Clone, PartialEq)]
pub enum SeparatorStrategy {
    /// Middle vertex of a path component.
    PathMidpoint,
    /// Centroid of a tree component.
    TreeCentroid,
    /// An interior row or column of a rectangular grid scope.
    GridAxis,
    /// A BFS level (or pair of levels) from the smallest vertex.
    BfsLevel,
    /// The best bag of an externally supplied tree decomposition.
    SuppliedTreeDecomposition(TreeDecomposition),
}

impl SeparatorStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            SeparatorStrategy::PathMidpoint => "path-midpoint",
            SeparatorStrategy::TreeCentroid => "tree-centroid",
            SeparatorStrategy::GridAxis => "grid-axis",
            SeparatorStrategy::BfsLevel => "bfs-level",
            SeparatorStrategy::SuppliedTreeDecomposition(_) => "supplied-tree-decomposition",
        }
    }
}

impl FromStr for SeparatorStrategy {
    type Err = String;

    /// Parses the data-free strategies; the supplied tree decomposition
    /// needs a file and is constructed directly.
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "path-midpoint" => Ok(SeparatorStrategy::PathMidpoint),
            "tree-centroid" => Ok(SeparatorStrategy::TreeCentroid),
            "grid-axis" => Ok(SeparatorStrategy::GridAxis),
            "bfs-level" => Ok(SeparatorStrategy::BfsLevel),
            "supplied-tree-decomposition" => Err("supplied-tree-decomposition needs a decomposition file".into()),
            other => Err(format!("unknown separator strategy `{other}`")),
        }
    }
}

/// A separator of some scope and the two sides it leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparatorResult {
    pub separator: Vec<Vertex>,
    pub side_a: Vec<Vertex>,
    pub side_b: Vec<Vertex>,
}

/// Outcome of packing the components left by a candidate separator.
struct Packed {
    result: SeparatorResult,
    max_component: usize,
}

impl Packed {
    fn max_side(&self) -> usize {
        self.result.side_a.len().max(self.result.side_b.len())
    }
}

fn balanced(packed: &Packed, scope_len: usize, params: &TreeParams) -> bool {
    let s = packed.result.separator.len();
    packed.max_component as f64 <= params.component_limit(scope_len) + 1e-9
        && (packed.max_side() + s) as f64 <= params.child_limit(scope_len) + 1e-9
}

/// Removes `sep` from `sub`, then packs the remaining components into two
/// sides, largest first, each onto the currently smaller side.
fn pack(g: &WeightedGraph, sub: &Subgraph, sep: Vec<Vertex>) -> Packed {
    let rest: Vec<Vertex> = sub
        .vertices()
        .iter()
        .copied()
        .filter(|v| sep.binary_search(v).is_err())
        .collect();
    let mut comps = sub.restrict(g, &rest).components(g);
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));
    let max_component = comps.first().map_or(0, Vec::len);
    let (mut side_a, mut side_b) = (Vec::new(), Vec::new());
    for comp in comps {
        if side_a.len() <= side_b.len() {
            side_a.extend(comp);
        } else {
            side_b.extend(comp);
        }
    }
    side_a.sort_unstable();
    side_b.sort_unstable();
    Packed {
        result: SeparatorResult {
            separator: sep,
            side_a,
            side_b,
        },
        max_component,
    }
}

/// Per-graph data shared by all separator searches of one build.
struct SearchContext<'a> {
    g: &'a WeightedGraph,
    strategy: &'a SeparatorStrategy,
    grid: Option<(usize, usize)>,
}

impl<'a> SearchContext<'a> {
    fn new(g: &'a WeightedGraph, strategy: &'a SeparatorStrategy) -> Self {
        let grid = match strategy {
            SeparatorStrategy::GridAxis => detect_grid(g),
            _ => None,
        };
        SearchContext { g, strategy, grid }
    }

    fn inapplicable(&self, reason: impl Into<String>) -> DecompError {
        DecompError::StrategyInapplicable {
            strategy: self.strategy.name(),
            reason: reason.into(),
        }
    }

    /// Finds the best valid separator of `sub`.
    fn separate(&self, sub: &Subgraph, params: &TreeParams) -> Result<SeparatorResult, DecompError> {
        if sub.is_empty() {
            return Err(DecompError::EmptyScope);
        }
        let g = self.g;
        let comps = sub.components(g);
        if comps.len() > 1 {
            let packed = pack(g, sub, Vec::new());
            if balanced(&packed, sub.len(), params) {
                return Ok(packed.result);
            }
        }
        let largest = comps
            .iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| a.len().cmp(&b.len()).then_with(|| j.cmp(i)))
            .map(|(_, c)| c)
            .expect("nonempty scope has a component");
        let comp = sub.restrict(g, largest);

        let mut best: Option<(Vec<usize>, Vec<Vertex>, Packed)> = None;
        let mut smallest_over_cap: Option<usize> = None;
        for round in self.candidate_rounds(sub, &comp)? {
            for sep in round {
                let packed = pack(g, sub, sep);
                if !balanced(&packed, sub.len(), params) {
                    continue;
                }
                let size = packed.result.separator.len();
                if size > params.p {
                    smallest_over_cap = Some(smallest_over_cap.map_or(size, |s: usize| s.min(size)));
                    continue;
                }
                let key = self.key(&packed);
                let better = match &best {
                    None => true,
                    Some((k, s, _)) => (&key, &packed.result.separator) < (k, s),
                };
                if better {
                    best = Some((key, packed.result.separator.clone(), packed));
                }
            }
            if best.is_some() {
                break;
            }
        }
        match (best, smallest_over_cap) {
            (Some((_, _, packed)), _) => Ok(packed.result),
            (None, Some(smallest)) => Err(DecompError::CapExceeded {
                cap: params.p,
                smallest,
            }),
            (None, None) => Err(DecompError::Unbalanced {
                strategy: self.strategy.name(),
                size: sub.len(),
            }),
        }
    }

    /// Primary comparison key; ties fall to the lexicographically smallest
    /// separator.
    fn key(&self, packed: &Packed) -> Vec<usize> {
        let s = packed.result.separator.len();
        match self.strategy {
            SeparatorStrategy::PathMidpoint | SeparatorStrategy::TreeCentroid => vec![packed.max_side()],
            SeparatorStrategy::GridAxis => vec![s, packed.max_side()],
            SeparatorStrategy::BfsLevel => vec![s],
            SeparatorStrategy::SuppliedTreeDecomposition(_) => vec![packed.max_component, s],
        }
    }

    /// Candidate separators grouped in rounds; a later round is only
    /// searched when no candidate of an earlier one was valid.
    fn candidate_rounds(&self, sub: &Subgraph, comp: &Subgraph) -> Result<Vec<Vec<Vec<Vertex>>>, DecompError> {
        let g = self.g;
        Ok(match self.strategy {
            SeparatorStrategy::PathMidpoint => vec![vec![vec![path_midpoint(g, comp).ok_or_else(|| {
                self.inapplicable("the largest component is not a path")
            })?]]],
            SeparatorStrategy::TreeCentroid => vec![vec![vec![tree_centroid(g, comp).ok_or_else(|| {
                self.inapplicable("the largest component is not a tree")
            })?]]],
            SeparatorStrategy::GridAxis => {
                let (_, cols) = self.grid.ok_or_else(|| self.inapplicable("the graph is not a grid"))?;
                let mut rounds = vec![grid_axis_candidates(sub, cols)];
                rounds.extend(exhaustive_rounds(comp));
                rounds
            }
            SeparatorStrategy::BfsLevel => {
                let mut rounds = bfs_level_rounds(g, comp);
                rounds.extend(exhaustive_rounds(comp));
                rounds
            }
            SeparatorStrategy::SuppliedTreeDecomposition(td) => {
                let mut seen = Vec::new();
                for bag in &td.bags {
                    let s: Vec<Vertex> = bag.iter().copied().filter(|&v| comp.contains(v)).collect();
                    if !s.is_empty() {
                        seen.push(s);
                    }
                }
                seen.sort();
                seen.dedup();
                if seen.is_empty() {
                    return Err(self.inapplicable("no bag meets the scope"));
                }
                let mut rounds = vec![seen];
                rounds.extend(exhaustive_rounds(comp));
                rounds
            }
        })
    }
}

/// The middle vertex of a path component, ties to the smaller id.
fn path_midpoint(g: &WeightedGraph, comp: &Subgraph) -> Option<Vertex> {
    let lg = comp.local_graph(g);
    let k = comp.len();
    if comp.edges().len() + 1 != k || (0..k).any(|v| lg.neighbors(v).count() > 2) {
        return None;
    }
    let start = (0..k).find(|&v| lg.neighbors(v).count() <= 1)?;
    let mut order = vec![start];
    let mut prev = usize::MAX;
    let mut cur = start;
    while let Some((next, _)) = lg.neighbors(cur).find(|&(u, _)| u != prev) {
        order.push(next);
        prev = cur;
        cur = next;
    }
    let best = (0..k)
        .min_by_key(|&i| (i.max(k - 1 - i), comp.vertices()[order[i]]))
        .expect("nonempty path");
    Some(comp.vertices()[order[best]])
}

/// The vertex minimising the largest remaining component of a tree
/// component, ties to the smaller id.
fn tree_centroid(g: &WeightedGraph, comp: &Subgraph) -> Option<Vertex> {
    let k = comp.len();
    if comp.edges().len() + 1 != k {
        return None;
    }
    let lg = comp.local_graph(g);
    let mut parent = vec![usize::MAX; k];
    let mut order = Vec::with_capacity(k);
    let mut stack = vec![0];
    let mut seen = vec![false; k];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        order.push(v);
        for (u, _) in lg.neighbors(v) {
            if !seen[u] {
                seen[u] = true;
                parent[u] = v;
                stack.push(u);
            }
        }
    }
    let mut size = vec![1usize; k];
    let mut heaviest_child = vec![0usize; k];
    for &v in order.iter().rev() {
        if parent[v] != usize::MAX {
            size[parent[v]] += size[v];
            heaviest_child[parent[v]] = heaviest_child[parent[v]].max(size[v]);
        }
    }
    let best = (0..k)
        .min_by_key(|&v| (heaviest_child[v].max(k - size[v]), comp.vertices()[v]))
        .expect("nonempty tree");
    Some(comp.vertices()[best])
}

/// Detects a row-major `rows × cols` grid labelling, fewest rows first.
pub fn detect_grid(g: &WeightedGraph) -> Option<(usize, usize)> {
    let n = g.n();
    if n == 0 {
        return None;
    }
    (1..=n).filter(|r| n % r == 0).map(|r| (r, n / r)).find(|&(rows, cols)| {
        let expected = rows * (cols - 1) + cols * (rows - 1);
        g.edge_count() == expected
            && g
                .edges()
                .iter()
                .all(|e| (e.v == e.u + 1 && e.u / cols == e.v / cols) || e.v == e.u + cols)
    })
}

/// Interior rows and columns of the scope's bounding box, each restricted
/// to the scope. Scopes stop being full rectangles once separator edges
/// have been dropped, so partial lines are allowed and left to the balance
/// check.
fn grid_axis_candidates(sub: &Subgraph, cols: usize) -> Vec<Vec<Vertex>> {
    let vs = sub.vertices();
    let rows_of = || vs.iter().map(|v| v / cols);
    let cols_of = || vs.iter().map(|v| v % cols);
    let (Some(r0), Some(r1), Some(c0), Some(c1)) = (rows_of().min(), rows_of().max(), cols_of().min(), cols_of().max())
    else {
        return Vec::new();
    };
    let line = |it: Vec<Vertex>| -> Vec<Vertex> { it.into_iter().filter(|v| sub.contains(*v)).collect() };
    let mut out = Vec::new();
    for r in r0 + 1..r1 {
        out.push(line((c0..=c1).map(|c| r * cols + c).collect()));
    }
    for c in c0 + 1..c1 {
        out.push(line((r0..=r1).map(|r| r * cols + c).collect()));
    }
    out.retain(|s| !s.is_empty());
    out
}

/// BFS levels from the smallest vertex of the component: single levels
/// first, then pairs of levels.
fn bfs_level_rounds(g: &WeightedGraph, comp: &Subgraph) -> Vec<Vec<Vec<Vertex>>> {
    let lg: LocalGraph = comp.local_graph(g);
    let hops = lg.bfs(0, usize::MAX);
    let depth = hops.iter().copied().filter(|&h| h != usize::MAX).max().unwrap_or(0);
    let mut levels = vec![Vec::new(); depth + 1];
    for (i, &h) in hops.iter().enumerate() {
        levels[h].push(comp.vertices()[i]);
    }
    let singles = levels.clone();
    let mut pairs = Vec::new();
    for a in 0..levels.len() {
        for b in a + 2..levels.len() {
            let mut s = levels[a].clone();
            s.extend_from_slice(&levels[b]);
            s.sort_unstable();
            pairs.push(s);
        }
    }
    vec![singles, pairs]
}

/// Largest component for which all vertex pairs are tried.
const EXHAUSTIVE_PAIRS: usize = 24;
/// Largest component for which all vertex triples are tried.
const EXHAUSTIVE_TRIPLES: usize = 12;

/// Fallback for small irregular pieces that the structured candidates fail
/// on: every single vertex, then every pair, then every triple, each only
/// up to a size limit.
fn exhaustive_rounds(comp: &Subgraph) -> Vec<Vec<Vec<Vertex>>> {
    let vs = comp.vertices();
    let mut rounds = vec![vs.iter().map(|&v| vec![v]).collect::<Vec<_>>()];
    if vs.len() <= EXHAUSTIVE_PAIRS {
        rounds.push(
            (0..vs.len())
                .flat_map(|i| (i + 1..vs.len()).map(move |j| vec![vs[i], vs[j]]))
                .collect(),
        );
    }
    if vs.len() <= EXHAUSTIVE_TRIPLES {
        let mut triples = Vec::new();
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                for k in j + 1..vs.len() {
                    triples.push(vec![vs[i], vs[j], vs[k]]);
                }
            }
        }
        rounds.push(triples);
    }
    rounds
}

/// Finds a separator of the subgraph induced by `scope`.
pub fn find_separator(
    g: &WeightedGraph,
    scope: &[Vertex],
    strategy: &SeparatorStrategy,
    params: &TreeParams,
) -> Result<SeparatorResult, DecompError> {
    params.check()?;
    let sub = Subgraph::induced(g, scope)?;
    SearchContext::new(g, strategy).separate(&sub, params)
}

/// Separator search on an explicit subgraph, used by the covering module.
pub(crate) fn find_separator_in(
    g: &WeightedGraph,
    sub: &Subgraph,
    strategy: &SeparatorStrategy,
    params: &TreeParams,
) -> Result<SeparatorResult, DecompError> {
    params.check()?;
    SearchContext::new(g, strategy).separate(sub, params)
}

/// One node `(G_b, S_b)` of the tree.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompNode {
    pub label: String,
    pub depth: usize,
    pub vertices: Vec<Vertex>,
    /// Empty for leaves.
    pub separator: Vec<Vertex>,
    pub children: Option<[usize; 2]>,
    pub parent: Option<usize>,
    /// Set when no balanced separator existed and the node was kept as an
    /// oversized leaf; validation reports it.
    pub forced_leaf: bool,
    pub edges: Vec<EdgeId>,
}

impl DecompNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn subgraph(&self) -> Subgraph {
        Subgraph::from_parts(self.vertices.clone(), self.edges.clone())
    }

    pub fn in_separator(&self, v: Vertex) -> bool {
        self.separator.binary_search(&v).is_ok()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }
}

/// The decomposition tree; `nodes[0]` is the root and nodes are stored in
/// breadth-first order.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompTree {
    pub n: usize,
    pub h: usize,
    pub params: TreeParams,
    pub strategy: String,
    pub nodes: Vec<DecompNode>,
    label_index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct NodeDump {
    b: String,
    size_v: usize,
    size_s: usize,
    children: Option<[String; 2]>,
    forced_leaf: bool,
    vertices: Vec<Vertex>,
    separator: Vec<Vertex>,
}

#[derive(Serialize, Deserialize)]
struct TreeDump {
    n: usize,
    h: usize,
    params: TreeParams,
    strategy: String,
    nodes: Vec<NodeDump>,
}

/// Edges of a child: the parent's edges inside `child` except those with
/// both endpoints in the parent's separator.
fn child_edges(g: &WeightedGraph, parent_edges: &[EdgeId], child: &[Vertex], sep: &[Vertex]) -> Vec<EdgeId> {
    parent_edges
        .iter()
        .copied()
        .filter(|&id| {
            let e = g.edge(id);
            child.binary_search(&e.u).is_ok()
                && child.binary_search(&e.v).is_ok()
                && !(sep.binary_search(&e.u).is_ok() && sep.binary_search(&e.v).is_ok())
        })
        .collect()
}

fn union_sorted(a: &[Vertex], b: &[Vertex]) -> Vec<Vertex> {
    let mut out = a.to_vec();
    out.extend_from_slice(b);
    out.sort_unstable();
    out.dedup();
    out
}

impl DecompTree {
    pub fn root(&self) -> &DecompNode {
        &self.nodes[0]
    }

    pub fn node(&self, i: usize) -> &DecompNode {
        &self.nodes[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.label_index.get(label).copied()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest separator actually used (at least 1, so it can serve as a
    /// sensitivity).
    pub fn max_separator(&self) -> usize {
        self.nodes.iter().map(|n| n.separator.len()).max().unwrap_or(0).max(1)
    }

    pub fn max_leaf(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).map(|n| n.vertices.len()).max().unwrap_or(0)
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Children before parents.
    pub fn post_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(0usize, false)];
        while let Some((i, expanded)) = stack.pop() {
            match (self.nodes[i].children, expanded) {
                (Some([a, b]), false) => {
                    stack.push((i, true));
                    stack.push((b, false));
                    stack.push((a, false));
                }
                _ => out.push(i),
            }
        }
        out
    }

    /// Which child side (0 or 1) holds the non-separator vertex `v` of
    /// internal node `i`.
    pub fn side_of(&self, i: usize, v: Vertex) -> Option<usize> {
        let [a, b] = self.nodes[i].children?;
        if self.nodes[i].in_separator(v) {
            None
        } else if self.nodes[a].contains(v) {
            Some(0)
        } else if self.nodes[b].contains(v) {
            Some(1)
        } else {
            None
        }
    }

    fn from_nodes(n: usize, h: usize, params: TreeParams, strategy: String, nodes: Vec<DecompNode>) -> Self {
        let label_index = nodes.iter().enumerate().map(|(i, nd)| (nd.label.clone(), i)).collect();
        DecompTree {
            n,
            h,
            params,
            strategy,
            nodes,
            label_index,
        }
    }

    /// JSON dump with per-node label, sizes, child labels and vertex lists.
    pub fn to_json(&self) -> String {
        let dump = TreeDump {
            n: self.n,
            h: self.h,
            params: self.params,
            strategy: self.strategy.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|nd| NodeDump {
                    b: nd.label.clone(),
                    size_v: nd.vertices.len(),
                    size_s: nd.separator.len(),
                    children: nd
                        .children
                        .map(|[a, b]| [self.nodes[a].label.clone(), self.nodes[b].label.clone()]),
                    forced_leaf: nd.forced_leaf,
                    vertices: nd.vertices.clone(),
                    separator: nd.separator.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&dump).expect("tree dump serialises")
    }

    /// Loads a dump and rebuilds every node's edge set from `g` with the
    /// child edge rule. Structural validity is left to [`validate_tree`].
    pub fn from_json(g: &WeightedGraph, text: &str) -> Result<Self, DecompError> {
        let dump: TreeDump = serde_json::from_str(text)?;
        if dump.n != g.n() {
            return Err(DecompError::MalformedTree(format!(
                "tree is for {} vertices, graph has {}",
                dump.n,
                g.n()
            )));
        }
        let index: HashMap<&str, usize> = dump.nodes.iter().enumerate().map(|(i, nd)| (nd.b.as_str(), i)).collect();
        if index.len() != dump.nodes.len() {
            return Err(DecompError::MalformedTree("duplicate node labels".into()));
        }
        if dump.nodes.first().map(|nd| nd.b.as_str()) != Some("") {
            return Err(DecompError::MalformedTree("first node must be the root with label \"\"".into()));
        }
        let mut nodes: Vec<DecompNode> = Vec::with_capacity(dump.nodes.len());
        for nd in &dump.nodes {
            let mut vertices = nd.vertices.clone();
            vertices.sort_unstable();
            vertices.dedup();
            for &v in &vertices {
                g.check_vertex(v)?;
            }
            let mut separator = nd.separator.clone();
            separator.sort_unstable();
            separator.dedup();
            let children = match &nd.children {
                None => None,
                Some([a, b]) => {
                    let lookup = |l: &String| {
                        index
                            .get(l.as_str())
                            .copied()
                            .ok_or_else(|| DecompError::MalformedTree(format!("unknown child label `{l}`")))
                    };
                    Some([lookup(a)?, lookup(b)?])
                }
            };
            nodes.push(DecompNode {
                label: nd.b.clone(),
                depth: nd.b.len(),
                vertices,
                separator,
                children,
                parent: None,
                forced_leaf: nd.forced_leaf,
                edges: Vec::new(),
            });
        }
        let mut order = vec![0usize];
        let mut seen = vec![false; nodes.len()];
        seen[0] = true;
        nodes[0].edges = (0..g.edge_count()).collect();
        let mut i = 0;
        while i < order.len() {
            let p = order[i];
            i += 1;
            if let Some(kids) = nodes[p].children {
                for c in kids {
                    if seen[c] {
                        return Err(DecompError::MalformedTree(format!("node `{}` reached twice", nodes[c].label)));
                    }
                    seen[c] = true;
                    nodes[c].parent = Some(p);
                    nodes[c].edges = child_edges(g, &nodes[p].edges, &nodes[c].vertices, &nodes[p].separator);
                    order.push(c);
                }
            }
        }
        if order.len() != nodes.len() {
            return Err(DecompError::MalformedTree("some nodes are unreachable from the root".into()));
        }
        Ok(DecompTree::from_nodes(dump.n, dump.h, dump.params, dump.strategy, nodes))
    }
}

/// Builds the decomposition tree. Nodes of size at most `c` become leaves;
/// a node without any balanced separator becomes a forced leaf (logged and
/// reported by validation); an exceeded separator cap is an error.
pub fn build_tree(
    g: &WeightedGraph,
    params: &TreeParams,
    strategy: &SeparatorStrategy,
) -> Result<DecompTree, DecompError> {
    params.check()?;
    let ctx = SearchContext::new(g, strategy);
    let h = params.depth_bound(g.n());
    let mut nodes = vec![DecompNode {
        label: String::new(),
        depth: 0,
        vertices: (0..g.n()).collect(),
        separator: Vec::new(),
        children: None,
        parent: None,
        forced_leaf: false,
        edges: (0..g.edge_count()).collect(),
    }];
    let mut i = 0;
    while i < nodes.len() {
        if nodes[i].vertices.len() > params.c {
            match ctx.separate(&nodes[i].subgraph(), params) {
                Ok(res) => {
                    let parent = &nodes[i];
                    let mut kids = Vec::with_capacity(2);
                    for (bit, side) in [(0, &res.side_a), (1, &res.side_b)] {
                        let vertices = union_sorted(side, &res.separator);
                        let edges = child_edges(g, &parent.edges, &vertices, &res.separator);
                        kids.push(DecompNode {
                            label: format!("{}{bit}", parent.label),
                            depth: parent.depth + 1,
                            vertices,
                            separator: Vec::new(),
                            children: None,
                            parent: Some(i),
                            forced_leaf: false,
                            edges,
                        });
                    }
                    let first = nodes.len();
                    nodes.extend(kids);
                    nodes[i].separator = res.separator;
                    nodes[i].children = Some([first, first + 1]);
                }
                Err(DecompError::Unbalanced { .. }) => {
                    log::warn!(
                        "node b={:?} with {} vertices has no balanced separator; kept as a leaf",
                        nodes[i].label,
                        nodes[i].vertices.len()
                    );
                    nodes[i].forced_leaf = true;
                }
                Err(e) => return Err(e),
            }
        }
        i += 1;
    }
    Ok(DecompTree::from_nodes(g.n(), h, *params, strategy.name().to_string(), nodes))
}

/// One finding of [`validate_tree`], tagged with the node label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub b: String,
    pub check: &'static str,
    pub detail: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b={:?} {}: {}", self.b, self.check, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub h: usize,
    pub depth: usize,
    pub max_edge_multiplicity: usize,
    pub node_count: usize,
    pub violations: Vec<Finding>,
    /// Informational findings that do not fail validation.
    pub notes: Vec<Finding>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_violation(&self, b: &str, check: &str) -> bool {
        self.violations.iter().any(|f| f.b == b && f.check == check)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "nodes={} depth={} h={} max_edge_multiplicity={} violations={} notes={}",
            self.node_count,
            self.depth,
            self.h,
            self.max_edge_multiplicity,
            self.violations.len(),
            self.notes.len()
        )?;
        for v in &self.violations {
            writeln!(f, "VIOLATION {v}")?;
        }
        for n in &self.notes {
            writeln!(f, "note {n}")?;
        }
        Ok(())
    }
}

/// Re-checks every structural invariant of `t` against `g` from scratch:
/// the edge sets are re-derived from the vertex sets rather than trusted.
pub fn validate_tree(g: &WeightedGraph, t: &DecompTree) -> ValidationReport {
    let mut violations = Vec::new();
    let mut notes = Vec::new();
    let flag = |list: &mut Vec<Finding>, b: &str, check: &'static str, detail: String| {
        list.push(Finding {
            b: b.to_string(),
            check,
            detail,
        })
    };
    let params = t.params;
    let h = params.depth_bound(g.n());
    if t.h != h {
        flag(&mut violations, "", "depth-bound", format!("stored h = {} but recomputed h = {h}", t.h));
    }
    let mut multiplicity = vec![0usize; g.edge_count()];
    let mut derived: Vec<Option<Vec<EdgeId>>> = vec![None; t.nodes.len()];
    if t.nodes.is_empty() || t.nodes[0].vertices != (0..g.n()).collect::<Vec<_>>() {
        flag(&mut violations, "", "root", "root vertex set is not 0..n".into());
    }
    derived[0] = Some((0..g.edge_count()).collect());
    let mut queue = vec![0usize];
    let mut qi = 0;
    while qi < queue.len() {
        let i = queue[qi];
        qi += 1;
        let nd = &t.nodes[i];
        let b = nd.label.as_str();
        let edges = derived[i].take().expect("edges derived before visit");
        for &id in &edges {
            multiplicity[id] += 1;
        }
        if !nd.edges.is_empty() && nd.edges != edges {
            flag(&mut violations, b, "edge-rule", "stored edge set differs from the child edge rule".into());
        }
        if nd.depth > h {
            flag(&mut violations, b, "depth", format!("depth {} exceeds h = {h}", nd.depth));
        }
        let size = nd.vertices.len();
        let Some([c0, c1]) = nd.children else {
            if size > params.c {
                let check = if nd.forced_leaf { "forced-leaf" } else { "leaf-size" };
                flag(&mut violations, b, check, format!("leaf has {size} vertices > c = {}", params.c));
            }
            derived[i] = Some(edges);
            continue;
        };
        for (bit, c) in [(0, c0), (1, c1)] {
            if t.nodes[c].label != format!("{b}{bit}") || t.nodes[c].parent.map_or(false, |p| p != i) {
                flag(&mut violations, b, "label", format!("child {bit} is labelled {:?}", t.nodes[c].label));
            }
        }
        let sep = &nd.separator;
        if let Some(&v) = sep.iter().find(|&&v| !nd.contains(v)) {
            flag(&mut violations, b, "partition", format!("separator vertex {v} not in V_b"));
        }
        let sides: Vec<Vec<Vertex>> = [c0, c1]
            .iter()
            .map(|&c| {
                t.nodes[c]
                    .vertices
                    .iter()
                    .copied()
                    .filter(|v| sep.binary_search(v).is_err())
                    .collect()
            })
            .collect();
        for (bit, &c) in [c0, c1].iter().enumerate() {
            if let Some(&v) = sep.iter().find(|&&v| !t.nodes[c].contains(v)) {
                flag(&mut violations, b, "partition", format!("separator vertex {v} missing from child {bit}"));
            }
            if let Some(&v) = sides[bit].iter().find(|&&v| !nd.contains(v)) {
                flag(&mut violations, b, "partition", format!("child {bit} vertex {v} not in V_b"));
            }
        }
        let mut side_of = vec![u8::MAX; g.n()];
        for (bit, side) in sides.iter().enumerate() {
            for &v in side {
                if side_of[v] != u8::MAX {
                    flag(&mut violations, b, "partition", format!("vertex {v} on both sides"));
                }
                side_of[v] = bit as u8;
            }
        }
        if sep.len() + sides[0].len() + sides[1].len() != size {
            flag(&mut violations, b, "partition", "S_b and the sides do not cover V_b".into());
        }
        for &id in &edges {
            let e = g.edge(id);
            let (su, sv) = (side_of[e.u], side_of[e.v]);
            if su != u8::MAX && sv != u8::MAX && su != sv {
                flag(&mut violations, b, "crossing-edge", format!("edge {{{}, {}}} joins the two sides", e.u, e.v));
            }
        }
        if sep.len() > params.p {
            flag(&mut violations, b, "separator-cap", format!("|S_b| = {} > p = {}", sep.len(), params.p));
        }
        let slack = (params.q_prime - params.q) * size as f64;
        if sep.len() as f64 > slack + 1e-9 {
            flag(
                &mut notes,
                b,
                "separator-slack",
                format!("|S_b| = {} exceeds (q'-q)|V_b| = {slack:.2}", sep.len()),
            );
        }
        let rest: Vec<Vertex> = nd.vertices.iter().copied().filter(|v| sep.binary_search(v).is_err()).collect();
        let rest_sub = Subgraph::from_parts(nd.vertices.clone(), edges.clone()).restrict(g, &rest);
        let largest = rest_sub.components(g).iter().map(Vec::len).max().unwrap_or(0);
        if largest as f64 > params.component_limit(size) + 1e-9 {
            flag(&mut violations, b, "balance", format!("component of {largest} vertices > q|V_b|"));
        }
        for (bit, &c) in [c0, c1].iter().enumerate() {
            let child_size = t.nodes[c].vertices.len();
            if child_size as f64 > params.child_limit(size) + 1e-9 {
                flag(&mut violations, b, "child-size", format!("child {bit} has {child_size} vertices > q'|V_b|"));
            }
            derived[c] = Some(child_edges(g, &edges, &t.nodes[c].vertices, sep));
            queue.push(c);
        }
        derived[i] = Some(edges);
    }
    if queue.len() != t.nodes.len() {
        flag(&mut violations, "", "reachability", "some nodes are unreachable from the root".into());
    }
    let max_edge_multiplicity = multiplicity.iter().copied().max().unwrap_or(0);
    // An edge lies in at most one node per level and there are depth + 1
    // levels, so the provable bound is h + 1. Reaching it is reported as a
    // note; exceeding it means the tree is corrupt.
    let mut at_levels = 0;
    for (id, &m) in multiplicity.iter().enumerate() {
        if m > h + 1 {
            let e = g.edge(id);
            flag(
                &mut violations,
                "",
                "edge-multiplicity",
                format!("edge {{{}, {}}} appears in {m} > h + 1 = {} nodes", e.u, e.v, h + 1),
            );
        } else if m == h + 1 {
            at_levels += 1;
        }
    }
    if at_levels > 0 {
        flag(
            &mut notes,
            "",
            "edge-multiplicity",
            format!("{at_levels} edges appear in h + 1 = {} nodes (one per level)", h + 1),
        );
    }
    ValidationReport {
        h,
        depth: t.depth(),
        max_edge_multiplicity,
        node_count: t.nodes.len(),
        violations,
        notes,
    }
}

// SPDX-License-Identifier: Apache-2.0

//! The noisy shortcut table: the only part of the pipeline that reads the
//! edge weights.
//!
//! For each internal node `b` with released set `Z_b` (the separator `S_b`,
//! or a k-covering of it in the covering variant):
//! * within releases: `d_b(x, y)` for distinct `x, y ∈ Z_b`;
//! * cross releases (non-root `b` with parent `b′`): `d_b(x, y)` for
//!   `x ∈ Z_{b′} \ S_b`, `y ∈ Z_b`, stored under the child `b` whose
//!   subgraph the distance is measured in;
//! * leaf releases: `d_b(x, y)` for all distinct `x, y ∈ V_b`.
//!
//! Every release adds independent noise from a stream keyed by the node
//! label and release kind. Infinite distances are stored without noise and
//! finite noisy values are never clamped.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::covering::covering_in_hosts;
use crate::decomposition::DecompTree;
use crate::graph::{parse_f64, push_f64, Subgraph, Vertex, WeightedGraph};
use crate::privacy::{derive_noise_params, DerivedNoiseParams, PrivacyBudget, PrivacyError, ReleaseKind, RngStream};

#[derive(Debug, thiserror::Error)]
pub enum ShortcutError {
    #[error("shortcut table line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error("the covering variant needs a declared weight cap W > 0")]
    MissingWeightCap,
    #[error("the covering variant needs k >= 1")]
    InvalidK,
    #[error("tree does not match the graph: {0}")]
    InvalidTree(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "variant")]
pub enum Variant {
    General,
    Covering { k: usize },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::General => "general",
            Variant::Covering { .. } => "covering",
        }
    }
}

/// `Zero` disables all noise. It exists only for testing and debugging:
/// a zero-noise table is not private.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseSetting {
    Calibrated,
    Zero,
}

/// Released set of one internal node and the map from separator vertices
/// to their representative in it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodePlan {
    pub centers: Vec<Vertex>,
    /// Aligned with the node's sorted separator.
    pub center_of: Vec<Vertex>,
}

/// Which sets each node releases. Depends on the topology only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReleasePlan {
    pub variant: Variant,
    pub nodes: Vec<NodePlan>,
}

impl ReleasePlan {
    pub fn new(g: &WeightedGraph, tree: &DecompTree, variant: Variant) -> Self {
        let nodes = tree
            .nodes
            .iter()
            .map(|nd| {
                if nd.is_leaf() {
                    return NodePlan::default();
                }
                match variant {
                    Variant::General => NodePlan {
                        centers: nd.separator.clone(),
                        center_of: nd.separator.clone(),
                    },
                    Variant::Covering { k } => {
                        // Hops are measured inside each child graph. The
                        // children lack the edges inside S_b, and the
                        // reconstruction measures the leg from a vertex to a
                        // center in a child.
                        let hosts: Vec<Subgraph> = nd
                            .children
                            .expect("internal node")
                            .iter()
                            .map(|&c| Subgraph::from_parts(tree.nodes[c].vertices.clone(), tree.nodes[c].edges.clone()))
                            .collect();
                        let cover = covering_in_hosts(g, &hosts, &nd.separator, k);
                        NodePlan {
                            center_of: nd.separator.iter().map(|v| cover.assignment[v]).collect(),
                            centers: cover.centers,
                        }
                    }
                }
            })
            .collect();
        ReleasePlan { variant, nodes }
    }

    /// Representative of separator vertex `v` of node `i`.
    pub fn center_of(&self, tree: &DecompTree, i: usize, v: Vertex) -> Vertex {
        let pos = tree.nodes[i].separator.binary_search(&v).expect("vertex is in the separator");
        self.nodes[i].center_of[pos]
    }

    pub fn is_center(&self, i: usize, v: Vertex) -> bool {
        self.nodes[i].centers.binary_search(&v).is_ok()
    }

    /// Largest released set; the internal-node sensitivity (at least 1).
    pub fn max_centers(&self) -> usize {
        self.nodes.iter().map(|p| p.centers.len()).max().unwrap_or(0).max(1)
    }
}

/// True (noise-free) values of one release, in the order noise is drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRelease {
    pub node: usize,
    pub kind: ReleaseKind,
    pub pairs: Vec<(Vertex, Vertex)>,
    pub values: Vec<f64>,
}

fn ordered(x: Vertex, y: Vertex) -> (Vertex, Vertex) {
    if x < y {
        (x, y)
    } else {
        (y, x)
    }
}

/// Exact subgraph distances `d_b` for every planned release.
pub fn true_release_values(g: &WeightedGraph, tree: &DecompTree, plan: &ReleasePlan) -> Vec<NodeRelease> {
    let mut out = Vec::new();
    for (i, nd) in tree.nodes.iter().enumerate() {
        let sub = nd.subgraph();
        let lg = sub.local_graph(g);
        let local = |v: Vertex| sub.local_index(v).expect("release vertex lies in V_b");
        let from = |sources: &[Vertex]| -> HashMap<Vertex, Vec<f64>> {
            sources.iter().map(|&z| (z, lg.dijkstra(local(z)))).collect()
        };
        if nd.is_leaf() {
            let dist = from(&nd.vertices);
            let mut pairs = Vec::new();
            let mut values = Vec::new();
            for (a, &x) in nd.vertices.iter().enumerate() {
                for &y in &nd.vertices[a + 1..] {
                    pairs.push((x, y));
                    values.push(dist[&x][local(y)]);
                }
            }
            out.push(NodeRelease {
                node: i,
                kind: ReleaseKind::Leaf,
                pairs,
                values,
            });
            continue;
        }
        let centers = &plan.nodes[i].centers;
        let dist = from(centers);
        let mut pairs = Vec::new();
        let mut values = Vec::new();
        for (a, &x) in centers.iter().enumerate() {
            for &y in &centers[a + 1..] {
                pairs.push((x, y));
                values.push(dist[&x][local(y)]);
            }
        }
        out.push(NodeRelease {
            node: i,
            kind: ReleaseKind::Within,
            pairs,
            values,
        });
        if let Some(parent) = nd.parent {
            let mut cross: Vec<((Vertex, Vertex), f64)> = Vec::new();
            for &x in plan.nodes[parent].centers.iter().filter(|&&x| !nd.in_separator(x)) {
                for &z in centers {
                    cross.push((ordered(x, z), dist[&z][local(x)]));
                }
            }
            cross.sort_by(|a, b| a.0.cmp(&b.0));
            out.push(NodeRelease {
                node: i,
                kind: ReleaseKind::Cross,
                pairs: cross.iter().map(|c| c.0).collect(),
                values: cross.iter().map(|c| c.1).collect(),
            });
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct ShortcutTable {
    pub variant: Variant,
    pub noise: NoiseSetting,
    pub params: DerivedNoiseParams,
    pub plan: ReleasePlan,
    pub seed: u64,
    labels: Vec<String>,
    label_index: HashMap<String, usize>,
    entries: HashMap<(usize, Vertex, Vertex), f64>,
    /// Entry counts per release kind: within, cross, leaf.
    pub counts: [usize; 3],
}

impl ShortcutTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry at node index `node`, order-insensitive in the pair.
    pub fn get(&self, node: usize, x: Vertex, y: Vertex) -> Option<f64> {
        let (a, b) = ordered(x, y);
        self.entries.get(&(node, a, b)).copied()
    }

    /// `5·2^h·max{p², c²}` with `p` the internal sensitivity actually used.
    pub fn entry_bound(&self) -> f64 {
        let (p, c) = match self.params.mode {
            crate::privacy::NoiseMode::ApproximateGaussian => (self.params.sensitivity_internal, self.params.sensitivity_leaf),
            crate::privacy::NoiseMode::PureLaplace => (self.params.sensitivity_internal.sqrt(), self.params.sensitivity_leaf.sqrt()),
        };
        5.0 * 2f64.powi(self.params.h as i32) * (p * p).max(c * c)
    }

    /// `b,x,y,value` rows sorted by node order then pair, `inf` for ∞.
    pub fn to_csv(&self) -> String {
        let mut keys: Vec<_> = self.entries.keys().copied().collect();
        keys.sort_unstable();
        let mut out = String::from("b,x,y,value\n");
        for key in keys {
            out.push_str(&self.labels[key.0]);
            out.push_str(&format!(",{},{},", key.1, key.2));
            push_f64(&mut out, self.entries[&key]);
            out.push('\n');
        }
        out
    }

    /// Reloads a table written by [`ShortcutTable::to_csv`]. The release
    /// plan is recomputed from the topology of `g` and the tree; no weight
    /// is read.
    pub fn from_csv(
        g: &WeightedGraph,
        tree: &DecompTree,
        variant: Variant,
        noise: NoiseSetting,
        params: DerivedNoiseParams,
        seed: u64,
        text: &str,
    ) -> Result<Self, ShortcutError> {
        check_tree(g, tree)?;
        let plan = ReleasePlan::new(g, tree, variant);
        let mut table = Self::empty(tree, variant, noise, params, plan, seed);
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "b,x,y,value")) => {}
            _ => {
                return Err(ShortcutError::Parse {
                    line: 1,
                    msg: "expected header b,x,y,value".into(),
                })
            }
        }
        for (i, line) in lines {
            let bad = |msg: &str| ShortcutError::Parse {
                line: i + 1,
                msg: msg.to_string(),
            };
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let [b, x, y, value] = fields[..] else {
                return Err(bad("expected four fields"));
            };
            let node = *table.label_index.get(b).ok_or_else(|| bad("unknown node label"))?;
            let x: Vertex = x.parse().map_err(|_| bad("bad vertex"))?;
            let y: Vertex = y.parse().map_err(|_| bad("bad vertex"))?;
            let value = parse_f64(value).ok_or_else(|| bad("bad value"))?;
            let nd = &tree.nodes[node];
            if !nd.contains(x) || !nd.contains(y) {
                return Err(bad("vertex outside the node"));
            }
            let slot = if nd.is_leaf() {
                2
            } else if nd.in_separator(x) && nd.in_separator(y) {
                0
            } else {
                1
            };
            if table.get(node, x, y).is_some() {
                return Err(bad("duplicate entry"));
            }
            table.counts[slot] += 1;
            table.insert(node, (x, y), value);
        }
        Ok(table)
    }

    fn empty(
        tree: &DecompTree,
        variant: Variant,
        noise: NoiseSetting,
        params: DerivedNoiseParams,
        plan: ReleasePlan,
        seed: u64,
    ) -> Self {
        let labels: Vec<String> = tree.nodes.iter().map(|n| n.label.clone()).collect();
        let label_index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        ShortcutTable {
            variant,
            noise,
            params,
            plan,
            seed,
            labels,
            label_index,
            entries: HashMap::new(),
            counts: [0; 3],
        }
    }

    fn insert(&mut self, node: usize, pair: (Vertex, Vertex), value: f64) {
        let (a, b) = ordered(pair.0, pair.1);
        let previous = self.entries.insert((node, a, b), value);
        assert!(previous.is_none(), "shortcut ({a}, {b}) at node {node} written twice");
    }
}

/// Entry at node label `b`, order-insensitive in the pair.
pub fn lookup(table: &ShortcutTable, x: Vertex, y: Vertex, b: &str) -> Option<f64> {
    table.get(*table.label_index.get(b)?, x, y)
}

/// The largest number of releases whose true values read one edge weight:
/// a node contributes one release (leaf or root) or two (within and cross)
/// for every edge of its subgraph. This is the `k` of the composition
/// accountant.
pub fn max_releases_per_edge(g: &WeightedGraph, tree: &DecompTree) -> usize {
    let mut count = vec![0usize; g.edge_count()];
    for nd in &tree.nodes {
        let releases = if nd.is_leaf() || nd.parent.is_none() { 1 } else { 2 };
        for &e in &nd.edges {
            count[e] += releases;
        }
    }
    count.into_iter().max().unwrap_or(0)
}

fn check_tree(g: &WeightedGraph, tree: &DecompTree) -> Result<(), ShortcutError> {
    if tree.n != g.n() {
        return Err(ShortcutError::InvalidTree(format!("tree has {} vertices, graph has {}", tree.n, g.n())));
    }
    if tree.nodes.is_empty() || tree.root().edges.len() != g.edge_count() {
        return Err(ShortcutError::InvalidTree("root edge set does not match the graph".into()));
    }
    Ok(())
}

fn build(
    g: &WeightedGraph,
    tree: &DecompTree,
    budget: &PrivacyBudget,
    variant: Variant,
    seed: u64,
    noise: NoiseSetting,
) -> Result<ShortcutTable, ShortcutError> {
    check_tree(g, tree)?;
    let plan = ReleasePlan::new(g, tree, variant);
    let sensitivity = match variant {
        Variant::General => tree.max_separator(),
        Variant::Covering { .. } => plan.max_centers(),
    };
    // a forced leaf larger than c releases more pairs; calibrate to it
    let leaf = tree.params.c.max(tree.max_leaf());
    let params = derive_noise_params(budget, tree.h, sensitivity as f64, leaf as f64)?;
    let mut table = ShortcutTable::empty(tree, variant, noise, params, plan, seed);
    for release in true_release_values(g, tree, &table.plan) {
        let scale = match release.kind {
            ReleaseKind::Leaf => params.sigma_leaf,
            _ => params.sigma_internal,
        };
        let mut stream = RngStream::new(seed, &table.labels[release.node], release.kind);
        let slot = match release.kind {
            ReleaseKind::Within => 0,
            ReleaseKind::Cross => 1,
            _ => 2,
        };
        table.counts[slot] += release.pairs.len();
        for (pair, value) in release.pairs.into_iter().zip(release.values) {
            let noisy = if value.is_infinite() || noise == NoiseSetting::Zero {
                value
            } else {
                value + stream.sample(params.mode, scale)?
            };
            table.insert(release.node, pair, noisy);
        }
    }
    Ok(table)
}

/// Shortcuts over full separators, calibrated to the largest separator.
pub fn build_shortcuts_general(
    g: &WeightedGraph,
    tree: &DecompTree,
    budget: &PrivacyBudget,
    seed: u64,
    noise: NoiseSetting,
) -> Result<ShortcutTable, ShortcutError> {
    build(g, tree, budget, Variant::General, seed, noise)
}

/// Shortcuts over k-coverings of the separators, calibrated to the largest
/// covering observed. Needs a declared weight cap.
pub fn build_shortcuts_covering(
    g: &WeightedGraph,
    tree: &DecompTree,
    budget: &PrivacyBudget,
    k: usize,
    seed: u64,
    noise: NoiseSetting,
) -> Result<ShortcutTable, ShortcutError> {
    if g.weight_cap().is_none() {
        return Err(ShortcutError::MissingWeightCap);
    }
    if k == 0 {
        return Err(ShortcutError::InvalidK);
    }
    build(g, tree, budget, Variant::Covering { k }, seed, noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{build_tree, SeparatorStrategy, TreeParams};
    use crate::graph::exact_subgraph_apsd;

    fn grid(rows: usize, cols: usize) -> WeightedGraph {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1, 1.0 + ((v * 7) % 5) as f64 / 5.0));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols, 1.0 + ((v * 3) % 4) as f64 / 4.0));
                }
            }
        }
        WeightedGraph::new(rows * cols, edges, Some(2.0)).unwrap()
    }

    fn budget() -> PrivacyBudget {
        PrivacyBudget::approximate(0.5, 1e-5)
    }

    #[test]
    fn single_leaf_path() {
        let g = WeightedGraph::new(4, (1..4).map(|i| (i - 1, i, 1.0)), None).unwrap();
        let t = build_tree(&g, &TreeParams::default(), &SeparatorStrategy::PathMidpoint).unwrap();
        let table = build_shortcuts_general(&g, &t, &budget(), 1, NoiseSetting::Calibrated).unwrap();
        assert_eq!(table.len(), 6);
        assert_eq!(lookup(&table, 0, 3, ""), lookup(&table, 3, 0, ""));
        assert!(lookup(&table, 0, 3, "").is_some());
        assert!(lookup(&table, 0, 3, "0").is_none());
    }

    #[test]
    fn zero_noise_entries_are_subgraph_distances() {
        let g = grid(6, 6);
        let t = build_tree(&g, &TreeParams::default(), &SeparatorStrategy::GridAxis).unwrap();
        let exact = crate::graph::exact_apsd(&g);
        for table in [
            build_shortcuts_general(&g, &t, &budget(), 1, NoiseSetting::Zero).unwrap(),
            build_shortcuts_covering(&g, &t, &budget(), 2, 1, NoiseSetting::Zero).unwrap(),
        ] {
            for (i, nd) in t.nodes.iter().enumerate() {
                let local = nd.subgraph().apsd(&g);
                let pos = |v: Vertex| nd.vertices.binary_search(&v).unwrap();
                for &x in &nd.vertices {
                    for &y in &nd.vertices {
                        if let Some(v) = table.get(i, x, y) {
                            let want = local.get(pos(x), pos(y));
                            assert!(v == want || (v - want).abs() < 1e-9, "{:?} ({x}, {y}): {v} vs {want}", nd.label);
                            assert!(v >= exact.get(x, y) - 1e-9);
                        }
                    }
                }
            }
            assert!((table.len() as f64) <= table.entry_bound());
        }
    }

    #[test]
    fn leaf_entries_match_induced_distances_when_no_edges_were_removed() {
        let g = WeightedGraph::new(6, (1..6).map(|i| (i - 1, i, i as f64)), None).unwrap();
        let t = build_tree(&g, &TreeParams::default(), &SeparatorStrategy::PathMidpoint).unwrap();
        let table = build_shortcuts_general(&g, &t, &budget(), 1, NoiseSetting::Zero).unwrap();
        for (i, nd) in t.nodes.iter().enumerate().filter(|(_, n)| n.is_leaf()) {
            let d = exact_subgraph_apsd(&g, &nd.vertices).unwrap();
            for &x in &nd.vertices {
                for &y in &nd.vertices {
                    if x != y {
                        assert_eq!(table.get(i, x, y), d.get(x, y));
                    }
                }
            }
        }
    }

    #[test]
    fn huge_k_needs_one_center_per_child_component() {
        let g = grid(8, 8);
        let t = build_tree(&g, &TreeParams::default(), &SeparatorStrategy::GridAxis).unwrap();
        let table = build_shortcuts_covering(&g, &t, &budget(), 64, 3, NoiseSetting::Calibrated).unwrap();
        for (i, nd) in t.nodes.iter().enumerate().filter(|(_, n)| !n.is_leaf()) {
            let centers = &table.plan.nodes[i].centers;
            let mut most = 0;
            let mut total = 0;
            for c in nd.children.unwrap() {
                let child = &t.nodes[c];
                let touching: Vec<Vec<Vertex>> = Subgraph::from_parts(child.vertices.clone(), child.edges.clone())
                    .components(&g)
                    .into_iter()
                    .filter(|comp| comp.iter().any(|v| nd.in_separator(*v)))
                    .collect();
                for comp in &touching {
                    assert!(comp.iter().any(|v| centers.contains(v)), "node {:?}: a child component has no center", nd.label);
                }
                most = most.max(touching.len());
                total += touching.len();
            }
            assert!((most..=total).contains(&centers.len()), "node {:?}: {} centers", nd.label, centers.len());
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = grid(5, 5);
        let t = build_tree(&g, &TreeParams::default(), &SeparatorStrategy::GridAxis).unwrap();
        let table = build_shortcuts_covering(&g, &t, &budget(), 2, 8, NoiseSetting::Calibrated).unwrap();
        let back = ShortcutTable::from_csv(&g, &t, table.variant, table.noise, table.params, table.seed, &table.to_csv())
            .unwrap();
        assert_eq!(back.to_csv(), table.to_csv());
        assert_eq!(back.counts, table.counts);
        assert_eq!(back.plan, table.plan);
        assert!(ShortcutTable::from_csv(&g, &t, table.variant, table.noise, table.params, 8, "b,x,y,value\nzz,0,1,2\n")
            .is_err());
    }

    #[test]
    fn covering_requires_cap_and_k() {
        let g = WeightedGraph::new(6, (1..6).map(|i| (i - 1, i, 1.0)), None).unwrap();
        let t = build_tree(&g, &TreeParams::default(), &SeparatorStrategy::PathMidpoint).unwrap();
        assert!(matches!(
            build_shortcuts_covering(&g, &t, &budget(), 1, 0, NoiseSetting::Zero),
            Err(ShortcutError::MissingWeightCap)
        ));
        let capped = WeightedGraph::new(6, (1..6).map(|i| (i - 1, i, 1.0)), Some(1.0)).unwrap();
        assert!(matches!(
            build_shortcuts_covering(&capped, &t, &budget(), 0, 0, NoiseSetting::Zero),
            Err(ShortcutError::InvalidK)
        ));
    }

    #[test]
    fn same_seed_same_table() {
        let g = grid(5, 5);
        let t = build_tree(&g, &TreeParams::default(), &SeparatorStrategy::GridAxis).unwrap();
        let a = build_shortcuts_general(&g, &t, &budget(), 9, NoiseSetting::Calibrated).unwrap();
        let b = build_shortcuts_general(&g, &t, &budget(), 9, NoiseSetting::Calibrated).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        let c = build_shortcuts_general(&g, &t, &budget(), 10, NoiseSetting::Calibrated).unwrap();
        assert_ne!(a.to_csv(), c.to_csv());
    }
}

// SPDX-License-Identifier: Apache-2.0

//! Graph families for experiments: paths, random trees, grids and
//! random connected subgraphs of grids.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sepapsd_core::{SeparatorStrategy, WeightedGraph};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum GenerateError {
    #[error("a graph needs at least one vertex")]
    Empty,
    #[error("grid shape {rows}x{cols} does not have n = {n} vertices")]
    GridShape { rows: usize, cols: usize, n: usize },
    #[error("weight cap must be positive and finite, got {0}")]
    Cap(f64),
    #[error("unknown graph family `{0}`")]
    Family(String),
    #[error("unknown weight distribution `{0}` (expected unit or uniform)")]
    Weights(String),
    #[error(transparent)]
    Graph(#[from] sepapsd_core::GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Path,
    RandomTree,
    Grid,
    SubgridPlanar,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Path => "path",
            Family::RandomTree => "random-tree",
            Family::Grid => "grid",
            Family::SubgridPlanar => "subgrid-planar",
        }
    }

    /// The separator strategy that fits the family's structure.
    pub fn strategy(self) -> SeparatorStrategy {
        match self {
            Family::Path => SeparatorStrategy::PathMidpoint,
            Family::RandomTree => SeparatorStrategy::TreeCentroid,
            Family::Grid => SeparatorStrategy::GridAxis,
            Family::SubgridPlanar => SeparatorStrategy::BfsLevel,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = GenerateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "path" => Ok(Family::Path),
            "random-tree" => Ok(Family::RandomTree),
            "grid" => Ok(Family::Grid),
            "subgrid-planar" => Ok(Family::SubgridPlanar),
            other => Err(GenerateError::Family(other.into())),
        }
    }
}

/// Edge weights: all 1, or i.i.d. uniform on `[0, W]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weights {
    Unit,
    Uniform { cap: f64 },
}

impl Weights {
    /// The declared weight cap `W`.
    pub fn cap(self) -> f64 {
        match self {
            Weights::Unit => 1.0,
            Weights::Uniform { cap } => cap,
        }
    }

    pub fn parse(kind: &str, cap: f64) -> Result<Self, GenerateError> {
        match kind {
            "unit" => Ok(Weights::Unit),
            "uniform" if cap > 0.0 && cap.is_finite() => Ok(Weights::Uniform { cap }),
            "uniform" => Err(GenerateError::Cap(cap)),
            other => Err(GenerateError::Weights(other.into())),
        }
    }

    fn draw(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Weights::Unit => 1.0,
            Weights::Uniform { cap } => rng.gen_range(0.0..=cap),
        }
    }
}

/// What to generate. `rows`/`cols` are required for the grid families and
/// then `n = rows·cols` (before deletion for `subgrid-planar`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub family: Family,
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    pub weights: Weights,
}

impl GraphSpec {
    pub fn path(n: usize, weights: Weights) -> Self {
        GraphSpec {
            family: Family::Path,
            n,
            rows: 1,
            cols: n,
            weights,
        }
    }

    pub fn random_tree(n: usize, weights: Weights) -> Self {
        GraphSpec {
            family: Family::RandomTree,
            n,
            rows: 0,
            cols: 0,
            weights,
        }
    }

    pub fn grid(rows: usize, cols: usize, weights: Weights) -> Self {
        GraphSpec {
            family: Family::Grid,
            n: rows * cols,
            rows,
            cols,
            weights,
        }
    }

    pub fn subgrid_planar(rows: usize, cols: usize, weights: Weights) -> Self {
        GraphSpec {
            family: Family::SubgridPlanar,
            ..Self::grid(rows, cols, weights)
        }
    }
}

/// Fraction of grid vertices deleted by `subgrid-planar`.
const SUBGRID_DELETION: f64 = 0.2;

/// Generates the graph, deterministically per `(spec, seed)`.
pub fn generate_graph(spec: &GraphSpec, seed: u64) -> Result<WeightedGraph, GenerateError> {
    if spec.n == 0 {
        return Err(GenerateError::Empty);
    }
    if matches!(spec.family, Family::Grid | Family::SubgridPlanar) && spec.rows * spec.cols != spec.n {
        return Err(GenerateError::GridShape {
            rows: spec.rows,
            cols: spec.cols,
            n: spec.n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = spec.weights;
    let cap = Some(w.cap());
    let n = spec.n;
    Ok(match spec.family {
        Family::Path => {
            let edges: Vec<_> = (1..n).map(|i| (i - 1, i, w.draw(&mut rng))).collect();
            WeightedGraph::new(n, edges, cap)?
        }
        Family::RandomTree => {
            // random recursive tree: each vertex attaches to a uniform
            // earlier vertex, then labels are shuffled
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            let edges: Vec<_> = (1..n)
                .map(|i| {
                    let parent = rng.gen_range(0..i);
                    (perm[parent], perm[i], w.draw(&mut rng))
                })
                .collect();
            WeightedGraph::new(n, edges, cap)?
        }
        Family::Grid => {
            let keep = vec![true; n];
            grid_subgraph(spec.rows, spec.cols, &keep, w, &mut rng)?
        }
        Family::SubgridPlanar => {
            let keep: Vec<bool> = (0..n).map(|_| !rng.gen_bool(SUBGRID_DELETION)).collect();
            let largest = largest_grid_component(spec.rows, spec.cols, &keep);
            let mut keep = vec![false; n];
            for v in largest {
                keep[v] = true;
            }
            if !keep.iter().any(|&k| k) {
                keep[0] = true;
            }
            grid_subgraph(spec.rows, spec.cols, &keep, w, &mut rng)?
        }
    })
}

fn grid_neighbors(rows: usize, cols: usize, v: usize) -> impl Iterator<Item = usize> {
    let (r, c) = (v / cols, v % cols);
    [
        (c > 0).then(|| v - 1),
        (c + 1 < cols).then(|| v + 1),
        (r > 0).then(|| v - cols),
        (r + 1 < rows).then(|| v + cols),
    ]
    .into_iter()
    .flatten()
}

/// Vertices of the largest component among the kept ones, ties to the
/// component holding the smallest vertex.
fn largest_grid_component(rows: usize, cols: usize, keep: &[bool]) -> Vec<usize> {
    let mut seen = vec![false; keep.len()];
    let mut best = Vec::new();
    for start in 0..keep.len() {
        if !keep[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut i = 0;
        while i < comp.len() {
            let v = comp[i];
            i += 1;
            for u in grid_neighbors(rows, cols, v) {
                if keep[u] && !seen[u] {
                    seen[u] = true;
                    comp.push(u);
                }
            }
        }
        if comp.len() > best.len() {
            best = comp;
        }
    }
    best
}

/// The grid restricted to the kept vertices, relabelled in row-major order.
fn grid_subgraph(
    rows: usize,
    cols: usize,
    keep: &[bool],
    w: Weights,
    rng: &mut ChaCha8Rng,
) -> Result<WeightedGraph, GenerateError> {
    let mut label = vec![usize::MAX; keep.len()];
    let mut m = 0;
    for (v, &k) in keep.iter().enumerate() {
        if k {
            label[v] = m;
            m += 1;
        }
    }
    let mut edges = Vec::new();
    for v in 0..keep.len() {
        if !keep[v] {
            continue;
        }
        for u in [v + 1, v + cols] {
            let adjacent = if u == v + 1 { (v % cols) + 1 < cols } else { v / cols + 1 < rows };
            if adjacent && keep[u] {
                edges.push((label[v], label[u], w.draw(rng)));
            }
        }
    }
    Ok(WeightedGraph::new(m, edges, Some(w.cap()))?)
}

/// The strategy for a graph whose family is unknown: path, tree or grid
/// when the topology is one, BFS levels otherwise.
pub fn auto_strategy(g: &WeightedGraph) -> SeparatorStrategy {
    let n = g.n();
    let max_degree = (0..n).map(|v| g.neighbors(v).len()).max().unwrap_or(0);
    let connected = sepapsd_core::Subgraph::full(g).components(g).len() <= 1;
    if connected && g.edge_count() + 1 == n {
        if max_degree <= 2 {
            SeparatorStrategy::PathMidpoint
        } else {
            SeparatorStrategy::TreeCentroid
        }
    } else if sepapsd_core::decomposition::detect_grid(g).is_some() {
        SeparatorStrategy::GridAxis
    } else {
        SeparatorStrategy::BfsLevel
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_of_five() {
        let g = generate_graph(&GraphSpec::path(5, Weights::Unit), 0).unwrap();
        assert_eq!(g.n(), 5);
        assert_eq!(g.edge_count(), 4);
        assert!(g.edges().iter().all(|e| e.v == e.u + 1 && e.w == 1.0));
    }

    #[test]
    fn four_by_four_grid_has_24_edges() {
        let g = generate_graph(&GraphSpec::grid(4, 4, Weights::Unit), 0).unwrap();
        assert_eq!((g.n(), g.edge_count()), (16, 24));
    }

    #[test]
    fn random_tree_is_spanning() {
        let g = generate_graph(&GraphSpec::random_tree(100, Weights::Uniform { cap: 2.0 }), 9).unwrap();
        assert_eq!(g.edge_count(), 99);
        assert_eq!(sepapsd_core::Subgraph::full(&g).components(&g).len(), 1);
        assert!(g.edges().iter().all(|e| (0.0..=2.0).contains(&e.w)));
    }

    #[test]
    fn subgrid_is_connected_and_smaller() {
        let g = generate_graph(&GraphSpec::subgrid_planar(10, 10, Weights::Unit), 3).unwrap();
        assert!(g.n() < 100 && g.n() > 30);
        assert_eq!(sepapsd_core::Subgraph::full(&g).components(&g).len(), 1);
    }

    #[test]
    fn bad_shapes_are_rejected() {
        let mut spec = GraphSpec::grid(4, 4, Weights::Unit);
        spec.n = 15;
        assert!(matches!(generate_graph(&spec, 0), Err(GenerateError::GridShape { .. })));
        assert!(matches!(generate_graph(&GraphSpec::path(0, Weights::Unit), 0), Err(GenerateError::Empty)));
        assert!(Weights::parse("uniform", 0.0).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = GraphSpec::random_tree(50, Weights::Uniform { cap: 1.0 });
        assert_eq!(generate_graph(&spec, 4).unwrap(), generate_graph(&spec, 4).unwrap());
        assert_ne!(generate_graph(&spec, 4).unwrap(), generate_graph(&spec, 5).unwrap());
    }

    #[test]
    fn auto_strategy_recognises_families() {
        let strategy = |spec: GraphSpec| auto_strategy(&generate_graph(&spec, 1).unwrap());
        assert_eq!(strategy(GraphSpec::path(9, Weights::Unit)), SeparatorStrategy::PathMidpoint);
        assert_eq!(strategy(GraphSpec::grid(3, 5, Weights::Unit)), SeparatorStrategy::GridAxis);
        assert_eq!(strategy(GraphSpec::random_tree(40, Weights::Unit)), SeparatorStrategy::TreeCentroid);
    }
}

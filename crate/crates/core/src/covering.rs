// SPDX-License-Identifier: Apache-2.0

//! k-coverings, center-based cluster partitions and cluster contraction.
//!
//! A k-covering of a vertex set is a set of centers such that every vertex
//! is within `k` hops of some center. Hop distances are unweighted and
//! measured inside a host subgraph.

use std::collections::BTreeMap;

use crate::decomposition::{find_separator_in, DecompError, SeparatorResult, SeparatorStrategy, TreeParams};
use crate::graph::{LocalGraph, Subgraph, Vertex, WeightedGraph};

/// Centers `Z` with the hop radius `k` and each covered vertex's center.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Covering {
    pub centers: Vec<Vertex>,
    pub radius: usize,
    pub assignment: BTreeMap<Vertex, Vertex>,
}

impl Covering {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn center_of(&self, v: Vertex) -> Option<Vertex> {
        self.assignment.get(&v).copied()
    }
}

/// Clusters partitioning a scope; `centers[i]` lies in `clusters[i]` and
/// every member is within `radius` hops of it inside the scope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPartition {
    pub clusters: Vec<Vec<Vertex>>,
    pub centers: Vec<Vertex>,
    pub radius: usize,
}

/// Upper bound `x + ⌊n/(k+1)⌋` on the covering size of `n` vertices in
/// `x` components.
pub fn covering_bound(n: usize, components: usize, k: usize) -> usize {
    components + n / (k + 1)
}

/// Greedy centers for one component: the smallest uncovered vertex becomes
/// a center and covers its k-ball.
fn greedy_component(lg: &LocalGraph, comp: &[usize], k: usize) -> Vec<usize> {
    let mut covered = vec![false; lg.len()];
    let mut centers = Vec::new();
    for &v in comp {
        if covered[v] {
            continue;
        }
        centers.push(v);
        let hops = lg.bfs(v, k);
        for &u in comp {
            if hops[u] <= k {
                covered[u] = true;
            }
        }
    }
    centers
}

/// The classic bounded construction: depths of a BFS tree from the
/// component's smallest vertex, the lightest residue class modulo `k+1`,
/// plus the root. Every vertex has an ancestor in that set within `k` hops.
fn depth_class_component(lg: &LocalGraph, comp: &[usize], k: usize) -> Vec<usize> {
    let root = comp[0];
    let hops = lg.bfs(root, usize::MAX);
    let mut classes = vec![Vec::new(); k + 1];
    for &v in comp {
        classes[hops[v] % (k + 1)].push(v);
    }
    let best = (0..=k).min_by_key(|&r| classes[r].len() + usize::from(r != 0)).expect("k + 1 classes");
    let mut centers = classes.swap_remove(best);
    if best != 0 {
        centers.push(root);
    }
    centers.sort_unstable();
    centers
}

/// k-covering of `targets` by centers drawn from `targets` that holds in
/// every host: each target lies within `k` hops of some center inside each
/// host containing it. Hosts are processed in order and each adds the
/// smallest uncovered targets as centers. A target is assigned its nearest
/// center in the first host that reaches one.
pub fn covering_in_hosts(g: &WeightedGraph, hosts: &[Subgraph], targets: &[Vertex], k: usize) -> Covering {
    let locals: Vec<LocalGraph> = hosts.iter().map(|h| h.local_graph(g)).collect();
    let local = |h: usize, v: Vertex| hosts[h].local_index(v);
    let mut centers: Vec<Vertex> = Vec::new();
    for (h, lg) in locals.iter().enumerate() {
        let sources: Vec<usize> = centers.iter().filter_map(|&c| local(h, c)).collect();
        let mut hops = lg.multi_bfs(&sources, k).0;
        for &t in targets {
            let Some(lt) = local(h, t) else { continue };
            if hops[lt] <= k {
                continue;
            }
            centers.push(t);
            for (d, &r) in hops.iter_mut().zip(&lg.bfs(lt, k)) {
                *d = (*d).min(r);
            }
        }
    }
    centers.sort_unstable();
    let mut assignment = BTreeMap::new();
    for (h, lg) in locals.iter().enumerate() {
        let sources: Vec<(usize, Vertex)> = centers.iter().filter_map(|&c| local(h, c).map(|l| (l, c))).collect();
        let idx: Vec<usize> = sources.iter().map(|&(l, _)| l).collect();
        let (hops, owner) = lg.multi_bfs(&idx, k);
        for &t in targets {
            if let Some(lt) = local(h, t) {
                if hops[lt] <= k {
                    assignment.entry(t).or_insert(sources[owner[lt]].1);
                }
            }
        }
    }
    for &t in targets {
        // a target in no host is its own center
        if !assignment.contains_key(&t) {
            centers.push(t);
            assignment.insert(t, t);
        }
    }
    centers.sort_unstable();
    Covering {
        centers,
        radius: k,
        assignment,
    }
}

/// k-covering of all vertices of `host`, hop distances measured in `host`.
///
/// Per component, the greedy centers are used unless the depth-class
/// construction is strictly smaller; the latter always meets
/// `1 + ⌊n_i/(k+1)⌋`, so the result meets `x + ⌊n/(k+1)⌋`.
pub fn covering_of_subgraph(g: &WeightedGraph, host: &Subgraph, k: usize) -> Covering {
    let lg = host.local_graph(g);
    let mut local_centers = Vec::new();
    for comp in lg.components() {
        let greedy = greedy_component(&lg, &comp, k);
        let classes = depth_class_component(&lg, &comp, k);
        local_centers.extend(if classes.len() < greedy.len() { classes } else { greedy });
    }
    local_centers.sort_unstable();
    let (_, owner) = lg.multi_bfs(&local_centers, k);
    let vs = host.vertices();
    let assignment = (0..vs.len())
        .map(|i| (vs[i], vs[local_centers[owner[i]]]))
        .collect();
    Covering {
        centers: local_centers.iter().map(|&i| vs[i]).collect(),
        radius: k,
        assignment,
    }
}

/// k-covering of `scope` with hops measured in the subgraph induced by
/// `scope`. An empty scope gives an empty covering.
pub fn greedy_k_covering(g: &WeightedGraph, scope: &[Vertex], k: usize) -> Result<Covering, crate::GraphError> {
    Ok(covering_of_subgraph(g, &Subgraph::induced(g, scope)?, k))
}

/// Voronoi cells of a `d`-covering of `host`: each vertex joins its
/// nearest center by hops (ties to the smaller center), so cells are
/// connected with radius at most `d`.
fn partition_of_subgraph(g: &WeightedGraph, host: &Subgraph, d: usize) -> ClusterPartition {
    let cover = covering_of_subgraph(g, host, d);
    let index: BTreeMap<Vertex, usize> = cover.centers.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut clusters = vec![Vec::new(); cover.centers.len()];
    for (&v, c) in &cover.assignment {
        clusters[index[c]].push(v);
    }
    ClusterPartition {
        clusters,
        centers: cover.centers,
        radius: d,
    }
}

/// Partition of `scope` into connected clusters of hop radius at most `d`
/// around their centers (hop diameter at most `2d`).
pub fn cluster_partition(g: &WeightedGraph, scope: &[Vertex], d: usize) -> Result<ClusterPartition, crate::GraphError> {
    Ok(partition_of_subgraph(g, &Subgraph::induced(g, scope)?, d))
}

/// Quotient graph with one unit-weight vertex per cluster and one edge per
/// pair of clusters joined by an original edge. Returns the graph and the
/// supernode-to-cluster map (supernode `i` is `clusters[i]`).
pub fn contract_clusters(g: &WeightedGraph, partition: &ClusterPartition) -> (WeightedGraph, Vec<Vec<Vertex>>) {
    let mut owner = vec![usize::MAX; g.n()];
    for (i, cluster) in partition.clusters.iter().enumerate() {
        for &v in cluster {
            owner[v] = i;
        }
    }
    let mut pairs: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .filter_map(|e| {
            let (a, b) = (owner[e.u], owner[e.v]);
            (a != usize::MAX && b != usize::MAX && a != b).then(|| (a.min(b), a.max(b)))
        })
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let quotient = WeightedGraph::new(
        partition.clusters.len(),
        pairs.into_iter().map(|(a, b)| (a, b, 1.0)),
        Some(1.0),
    )
    .expect("quotient edges are distinct and in range");
    (quotient, partition.clusters.clone())
}

/// Separator made of whole clusters, together with the cluster centers as
/// a `d`-covering of it.
///
/// The scope is partitioned into radius-`d` clusters, the quotient graph is
/// separated with `strategy`, and the chosen supernodes are lifted back.
/// The lifted separator is re-packed and re-checked on `g` itself. Scopes of
/// at most `c` vertices are returned whole as the separator, covered by
/// [`greedy_k_covering`].
pub fn separator_covering(
    g: &WeightedGraph,
    scope: &[Vertex],
    d: usize,
    strategy: &SeparatorStrategy,
    params: &TreeParams,
) -> Result<(SeparatorResult, Covering), DecompError> {
    let host = Subgraph::induced(g, scope)?;
    if host.len() <= params.c {
        let cover = covering_of_subgraph(g, &host, d);
        let sep = SeparatorResult {
            separator: host.vertices().to_vec(),
            side_a: Vec::new(),
            side_b: Vec::new(),
        };
        return Ok((sep, cover));
    }
    let partition = partition_of_subgraph(g, &host, d);
    let (quotient, clusters) = contract_clusters(g, &partition);
    let quotient_params = TreeParams { p: usize::MAX, ..*params };
    let q_sep = find_separator_in(&quotient, &Subgraph::full(&quotient), strategy, &quotient_params)?;
    let mut separator: Vec<Vertex> = q_sep.separator.iter().flat_map(|&i| clusters[i].iter().copied()).collect();
    separator.sort_unstable();
    if separator.len() > params.p {
        return Err(DecompError::CapExceeded {
            cap: params.p,
            smallest: separator.len(),
        });
    }
    let lifted = lift_and_check(g, &host, separator, params)?;
    let mut assignment = BTreeMap::new();
    let mut centers = Vec::new();
    for &i in &q_sep.separator {
        centers.push(partition.centers[i]);
        for &v in &clusters[i] {
            assignment.insert(v, partition.centers[i]);
        }
    }
    centers.sort_unstable();
    Ok((
        lifted,
        Covering {
            centers,
            radius: d,
            assignment,
        },
    ))
}

/// Packs the components of `host − separator` into two sides by vertex
/// count and checks the component bound `q|V|` on the original graph.
/// Whole-cluster separators are too coarse for the `q′` child bound on
/// small scopes, so that bound is left to the caller.
fn lift_and_check(
    g: &WeightedGraph,
    host: &Subgraph,
    separator: Vec<Vertex>,
    params: &TreeParams,
) -> Result<SeparatorResult, DecompError> {
    let rest: Vec<Vertex> = host
        .vertices()
        .iter()
        .copied()
        .filter(|v| separator.binary_search(v).is_err())
        .collect();
    let mut comps = host.restrict(g, &rest).components(g);
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));
    let (mut side_a, mut side_b) = (Vec::new(), Vec::new());
    for comp in &comps {
        if comp.len() as f64 > params.component_limit(host.len()) + 1e-9 {
            return Err(DecompError::Unbalanced {
                strategy: "separator-covering",
                size: host.len(),
            });
        }
        if side_a.len() <= side_b.len() {
            side_a.extend_from_slice(comp);
        } else {
            side_b.extend_from_slice(comp);
        }
    }
    side_a.sort_unstable();
    side_b.sort_unstable();
    Ok(SeparatorResult {
        separator,
        side_a,
        side_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::hop_ball;

    fn path(n: usize) -> WeightedGraph {
        WeightedGraph::new(n, (1..n).map(|i| (i - 1, i, 1.0)), Some(1.0)).unwrap()
    }

    fn grid(rows: usize, cols: usize) -> WeightedGraph {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1, 1.0));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols, 1.0));
                }
            }
        }
        WeightedGraph::new(rows * cols, edges, Some(1.0)).unwrap()
    }

    fn covers(g: &WeightedGraph, cover: &Covering, scope: &[Vertex]) -> bool {
        scope.iter().all(|&v| {
            let z = cover.center_of(v).unwrap();
            cover.centers.contains(&z) && hop_ball(g, z, cover.radius).contains(&v)
        })
    }

    #[test]
    fn single_vertex() {
        let g = path(1);
        let c = greedy_k_covering(&g, &[0], 3).unwrap();
        assert_eq!(c.centers, vec![0]);
    }

    #[test]
    fn path_seven_radius_one() {
        let g = path(7);
        let scope: Vec<_> = (0..7).collect();
        let c = greedy_k_covering(&g, &scope, 1).unwrap();
        assert!(c.len() <= 4);
        assert!(covers(&g, &c, &scope));
    }

    #[test]
    fn two_components() {
        let g = WeightedGraph::new(6, [(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0)], None).unwrap();
        let scope: Vec<_> = (0..6).collect();
        let c = greedy_k_covering(&g, &scope, 2).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.len() <= covering_bound(6, 2, 2));
        assert!(covers(&g, &c, &scope));
    }

    #[test]
    fn star_with_late_center_meets_bound() {
        // greedy alone picks every leaf before reaching the hub
        let g = WeightedGraph::new(6, (0..5).map(|i| (i, 5, 1.0)), None).unwrap();
        let c = greedy_k_covering(&g, &(0..6).collect::<Vec<_>>(), 1).unwrap();
        assert!(c.len() <= covering_bound(6, 1, 1), "{c:?}");
    }

    #[test]
    fn empty_scope() {
        let g = path(3);
        assert!(greedy_k_covering(&g, &[], 1).unwrap().is_empty());
        assert!(cluster_partition(&g, &[], 1).unwrap().clusters.is_empty());
    }

    #[test]
    fn path_nine_partition() {
        let g = path(9);
        let scope: Vec<_> = (0..9).collect();
        let p = cluster_partition(&g, &scope, 2).unwrap();
        assert!(p.clusters.len() <= 4);
        let mut all: Vec<_> = p.clusters.concat();
        all.sort_unstable();
        assert_eq!(all, scope);
        for cluster in &p.clusters {
            let sub = exact_hops_diameter(&g, cluster);
            assert!(sub <= 4);
        }
    }

    fn exact_hops_diameter(g: &WeightedGraph, cluster: &[Vertex]) -> usize {
        let sub = Subgraph::induced(g, cluster).unwrap();
        let lg = sub.local_graph(g);
        (0..cluster.len()).map(|s| *lg.bfs(s, usize::MAX).iter().max().unwrap()).max().unwrap()
    }

    #[test]
    fn clique_is_one_cluster() {
        let mut edges = Vec::new();
        for a in 0..5 {
            for b in a + 1..5 {
                edges.push((a, b, 1.0));
            }
        }
        let g = WeightedGraph::new(5, edges, None).unwrap();
        let p = cluster_partition(&g, &(0..5).collect::<Vec<_>>(), 1).unwrap();
        assert_eq!(p.clusters.len(), 1);
    }

    #[test]
    fn contractions() {
        let g = path(9);
        let triples = ClusterPartition {
            clusters: vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8]],
            centers: vec![1, 4, 7],
            radius: 1,
        };
        let (q, map) = contract_clusters(&g, &triples);
        assert_eq!(q.n(), 3);
        let pairs: Vec<_> = q.edges().iter().map(|e| (e.u, e.v)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2)]);
        assert_eq!(map[1], vec![3, 4, 5]);

        let singletons = ClusterPartition {
            clusters: (0..9).map(|v| vec![v]).collect(),
            centers: (0..9).collect(),
            radius: 0,
        };
        let (q, _) = contract_clusters(&g, &singletons);
        assert_eq!(q.edge_count(), 8);

        let whole = ClusterPartition {
            clusters: vec![(0..9).collect()],
            centers: vec![0],
            radius: 8,
        };
        let (q, _) = contract_clusters(&g, &whole);
        assert_eq!((q.n(), q.edge_count()), (1, 0));
    }

    #[test]
    fn path_nine_separator_covering() {
        let g = path(9);
        let scope: Vec<_> = (0..9).collect();
        let (sep, cover) =
            separator_covering(&g, &scope, 2, &SeparatorStrategy::PathMidpoint, &TreeParams::default()).unwrap();
        assert_eq!(sep.separator.len(), 3);
        assert_eq!(cover.len(), 1);
        assert!(covers(&g, &cover, &sep.separator));
    }

    #[test]
    fn grid_separator_covering() {
        let g = grid(8, 8);
        let scope: Vec<_> = (0..64).collect();
        let (sep, cover) =
            separator_covering(&g, &scope, 2, &SeparatorStrategy::BfsLevel, &TreeParams::default()).unwrap();
        assert!(!sep.separator.is_empty());
        assert!(covers(&g, &cover, &sep.separator));
        assert!(cover.len() <= sep.separator.len());
    }

    #[test]
    fn tiny_scope_is_its_own_separator() {
        let g = path(3);
        let (sep, cover) =
            separator_covering(&g, &[0, 1, 2], 1, &SeparatorStrategy::BfsLevel, &TreeParams::default()).unwrap();
        assert_eq!(sep.separator, vec![0, 1, 2]);
        assert_eq!(cover.centers, vec![0, 2]);
    }
}

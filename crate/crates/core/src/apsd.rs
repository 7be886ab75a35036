// SPDX-License-Identifier: Apache-2.0

//! Distance reconstruction from the shortcut table. Pure post-processing:
//! nothing here reads the weights.
//!
//! At an internal node `b` with separator `S`, children `b∘0`, `b∘1` and
//! anchors `A` (the parent's released set, empty at the root), the value of
//! a pair is fixed by the first matching rule:
//! 1. both endpoints in `S`: the within release between their
//!    representatives (0 if they share one);
//! 2. one endpoint `x ∈ S`, the other `y ∈ A \ S`: the cross release of
//!    `x`'s representative and `y`;
//! 3. an anchor `v` with partner `u ∉ S` (the larger id is `v` when both
//!    are anchors): `min{d_{b∘a}(u,v), min_{x∈Z} d_{b∘a}(u,x) + X(x,v)}`,
//!    with `X` from rule 1 or 2 and the first term only when `v` is on
//!    `u`'s side;
//! 4. otherwise, with `s` the endpoint outside `S` (or the earlier one by
//!    side, then id): `min{d_{b∘a}(s,t), min_{x,y∈Z} d_{b∘a}(s,x) + D(x,y) +
//!    d(y,t)}`, where `D` is rule 1, the last segment is measured in `t`'s
//!    child, and the direct term applies only when `s` and `t` share a
//!    child.
//!
//! `Z` is the node's released set: all of `S` for the general variant, the
//! covering centres otherwise. Minimising over `Z` keeps every intermediate
//! pair anchored in the child, so each estimate sums one release per level
//! on each side instead of recursing into rule 4 again.
//!
//! Leaves answer from their all-pairs release. Rules 3 and 4 are the two
//! cases of the recursive combiner; choosing by anchor membership instead
//! of by the caller's flag makes each pair's value independent of how it
//! was reached, so the memoised top-down recursion and the bottom-up
//! all-pairs pass produce bit-identical numbers. With zero noise and full
//! separators every rule is an exact identity for subgraph distances.

use std::collections::HashMap;

use crate::decomposition::{DecompNode, DecompTree};
use crate::graph::{DistanceMatrix, Vertex};
use crate::shortcuts::ShortcutTable;

const INF: f64 = f64::INFINITY;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ApsdError {
    #[error("vertex {vertex} out of range for a graph with {n} vertices")]
    VertexOutOfRange { vertex: Vertex, n: usize },
    #[error("vertex {vertex} is not in node b={b:?}")]
    NotInNode { b: String, vertex: Vertex },
    #[error("FAIL at node b={b:?}: k > 0 but neither {s} nor {t} is in the parent separator")]
    Fail { b: String, s: Vertex, t: Vertex },
    #[error("missing shortcut ({x}, {y}) at node b={b:?}")]
    MissingShortcut { b: String, x: Vertex, y: Vertex },
}

/// Tree, table and the memo of per-node pair values.
pub struct QueryContext<'a> {
    pub tree: &'a DecompTree,
    pub table: &'a ShortcutTable,
    memo: HashMap<(usize, Vertex, Vertex), f64>,
    /// Calls of [`recursive_apsd`], including memo and shortcut hits.
    pub invocations: u64,
    /// Pair values actually combined (memo misses).
    pub evaluations: u64,
}

impl<'a> QueryContext<'a> {
    pub fn new(tree: &'a DecompTree, table: &'a ShortcutTable) -> Self {
        QueryContext {
            tree,
            table,
            memo: HashMap::new(),
            invocations: 0,
            evaluations: 0,
        }
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    fn anchors(&self, i: usize) -> &'a [Vertex] {
        match self.tree.nodes[i].parent {
            Some(p) => &self.table.plan.nodes[p].centers,
            None => &[],
        }
    }

    fn shortcut(&self, i: usize, x: Vertex, y: Vertex) -> f64 {
        self.table.get(i, x, y).unwrap_or_else(|| {
            panic!(
                "{}",
                ApsdError::MissingShortcut {
                    b: self.tree.nodes[i].label.clone(),
                    x,
                    y
                }
            )
        })
    }

    /// Rule 1 for separator vertices `x`, `y` of node `i`.
    fn within(&self, i: usize, x: Vertex, y: Vertex) -> f64 {
        if x == y {
            return 0.0;
        }
        let (cx, cy) = (
            self.table.plan.center_of(self.tree, i, x),
            self.table.plan.center_of(self.tree, i, y),
        );
        if cx == cy {
            0.0
        } else {
            self.shortcut(i, cx, cy)
        }
    }

    /// Rule 2 for separator vertex `x` and anchor `y ∉ S` of node `i`.
    fn cross(&self, i: usize, x: Vertex, y: Vertex) -> f64 {
        self.shortcut(i, self.table.plan.center_of(self.tree, i, x), y)
    }
}

fn side_of(tree: &DecompTree, nd: &DecompNode, v: Vertex) -> usize {
    let [c0, _] = nd.children.expect("internal node");
    if tree.nodes[c0].contains(v) {
        0
    } else {
        1
    }
}

/// The memoised recursion for the pair `(s, t)` at node `node`. `k > 0`
/// marks a call made for a parent-separator pair; such a call with
/// neither endpoint in the parent separator returns [`ApsdError::Fail`].
pub fn recursive_apsd(ctx: &mut QueryContext<'_>, node: usize, s: Vertex, t: Vertex, k: usize) -> Result<f64, ApsdError> {
    ctx.invocations += 1;
    let tree = ctx.tree;
    let nd = &tree.nodes[node];
    for v in [s, t] {
        if !nd.contains(v) {
            return Err(ApsdError::NotInNode {
                b: nd.label.clone(),
                vertex: v,
            });
        }
    }
    if s == t {
        return Ok(0.0);
    }
    if let Some(v) = ctx.table.get(node, s, t) {
        return Ok(v);
    }
    if k > 0 {
        let in_parent = nd
            .parent
            .map_or(false, |p| tree.nodes[p].in_separator(s) || tree.nodes[p].in_separator(t));
        if !in_parent {
            return Err(ApsdError::Fail {
                b: nd.label.clone(),
                s,
                t,
            });
        }
    }
    let key = (node, s.min(t), s.max(t));
    if let Some(&v) = ctx.memo.get(&key) {
        return Ok(v);
    }
    let value = evaluate(ctx, node, s, t)?;
    debug_assert!(!value.is_nan());
    ctx.evaluations += 1;
    ctx.memo.insert(key, value);
    Ok(value)
}

fn evaluate(ctx: &mut QueryContext<'_>, node: usize, s: Vertex, t: Vertex) -> Result<f64, ApsdError> {
    let tree = ctx.tree;
    let nd = &tree.nodes[node];
    let Some(children) = nd.children else {
        return Err(ApsdError::MissingShortcut {
            b: nd.label.clone(),
            x: s,
            y: t,
        });
    };
    let mid = &ctx.table.plan.nodes[node].centers;
    let anchors = ctx.anchors(node);
    let is_anchor = |v: Vertex| anchors.binary_search(&v).is_ok();
    let (s_in, t_in) = (nd.in_separator(s), nd.in_separator(t));

    // rule 1
    if s_in && t_in {
        return Ok(ctx.within(node, s, t));
    }
    // rule 2
    if s_in && is_anchor(t) {
        return Ok(ctx.cross(node, s, t));
    }
    if t_in && is_anchor(s) {
        return Ok(ctx.cross(node, t, s));
    }
    // rule 3
    if is_anchor(s) || is_anchor(t) {
        let v = match (is_anchor(s), is_anchor(t)) {
            (true, true) => s.max(t),
            (true, false) => s,
            _ => t,
        };
        let u = if v == s { t } else { s };
        let child = children[side_of(tree, nd, u)];
        let mut best = if tree.nodes[child].contains(v) {
            recursive_apsd(ctx, child, u, v, 0)?
        } else {
            INF
        };
        let v_in = nd.in_separator(v);
        for &x in mid {
            let e = recursive_apsd(ctx, child, u, x, 1)?;
            let link = if v_in { ctx.within(node, x, v) } else { ctx.cross(node, x, v) };
            best = best.min(e + link);
        }
        return Ok(best);
    }
    // rule 4
    let (s, t) = if t_in {
        (s, t)
    } else if s_in {
        (t, s)
    } else if (side_of(tree, nd, s), s) < (side_of(tree, nd, t), t) {
        (s, t)
    } else {
        (t, s)
    };
    let t_in = nd.in_separator(t);
    let a = side_of(tree, nd, s);
    let child_a = children[a];
    let mut to_mid = Vec::with_capacity(mid.len());
    for &x in mid {
        to_mid.push(recursive_apsd(ctx, child_a, s, x, 1)?);
    }
    let lead: Vec<f64> = mid
        .iter()
        .map(|&y| {
            mid.iter()
                .zip(&to_mid)
                .map(|(&x, &e)| e + ctx.within(node, x, y))
                .fold(INF, f64::min)
        })
        .collect();
    let t_child = if t_in { child_a } else { children[side_of(tree, nd, t)] };
    let mut best = if t_child == child_a {
        recursive_apsd(ctx, child_a, s, t, 0)?
    } else {
        INF
    };
    for (&y, &l) in mid.iter().zip(&lead) {
        let tail = recursive_apsd(ctx, t_child, y, t, 1)?;
        best = best.min(l + tail);
    }
    Ok(best)
}

/// Single-pair estimate, sharing the context's memo across queries.
pub fn query_pair(ctx: &mut QueryContext<'_>, s: Vertex, t: Vertex) -> Result<f64, ApsdError> {
    let n = ctx.tree.n;
    for v in [s, t] {
        if v >= n {
            return Err(ApsdError::VertexOutOfRange { vertex: v, n });
        }
    }
    if s == t {
        return Ok(0.0);
    }
    recursive_apsd(ctx, 0, s, t, 0)
}

/// A node's full pair matrix, rows and columns in the node's order
/// `S ++ side 0 ++ side 1` (sorted vertex order at leaves).
struct NodeMatrix {
    order: Vec<Vertex>,
    /// Position in `order` of each vertex of the node's sorted vertex list.
    rank: Vec<usize>,
    data: Vec<f64>,
}

impl NodeMatrix {
    fn new(nd: &DecompNode, order: Vec<Vertex>) -> Self {
        let mut rank = vec![0; order.len()];
        for (p, v) in order.iter().enumerate() {
            rank[nd.vertices.binary_search(v).expect("order lists node vertices")] = p;
        }
        let n = order.len();
        let mut data = vec![INF; n * n];
        for p in 0..n {
            data[p * n + p] = 0.0;
        }
        NodeMatrix { order, rank, data }
    }

    fn n(&self) -> usize {
        self.order.len()
    }

    #[inline]
    fn get(&self, p: usize, q: usize) -> f64 {
        self.data[p * self.order.len() + q]
    }

    #[inline]
    fn set_sym(&mut self, p: usize, q: usize, v: f64) {
        debug_assert!(!v.is_nan());
        let n = self.order.len();
        self.data[p * n + q] = v;
        self.data[q * n + p] = v;
    }
}

fn leaf_matrix(ctx: &QueryContext<'_>, i: usize) -> NodeMatrix {
    let nd = &ctx.tree.nodes[i];
    let mut m = NodeMatrix::new(nd, nd.vertices.clone());
    for p in 0..m.n() {
        for q in p + 1..m.n() {
            let v = ctx.shortcut(i, m.order[p], m.order[q]);
            m.set_sym(p, q, v);
        }
    }
    m
}

fn internal_matrix(ctx: &QueryContext<'_>, i: usize, kids: [NodeMatrix; 2]) -> NodeMatrix {
    let tree = ctx.tree;
    let nd = &tree.nodes[i];
    let [c0, c1] = nd.children.expect("internal node");
    let sep = &nd.separator;
    let ns = sep.len();
    let sides: Vec<Vec<Vertex>> = [c0, c1]
        .iter()
        .map(|&c| {
            tree.nodes[c]
                .vertices
                .iter()
                .copied()
                .filter(|v| !nd.in_separator(*v))
                .collect()
        })
        .collect();
    let n0 = sides[0].len();
    let mut order = sep.clone();
    order.extend_from_slice(&sides[0]);
    order.extend_from_slice(&sides[1]);
    let n = order.len();
    let side = |p: usize| usize::from(p >= ns + n0);

    // position of each node-order index in each child's matrix
    let cmap: Vec<Vec<usize>> = [c0, c1]
        .iter()
        .zip(&kids)
        .map(|(&c, m)| {
            let child = &tree.nodes[c];
            order
                .iter()
                .map(|v| child.vertices.binary_search(v).map_or(usize::MAX, |r| m.rank[r]))
                .collect()
        })
        .collect();
    let child_get = |a: usize, p: usize, q: usize| kids[a].get(cmap[a][p], cmap[a][q]);

    // positions in `sep` of the released set
    let mid: Vec<usize> = ctx.table.plan.nodes[i]
        .centers
        .iter()
        .map(|c| sep.binary_search(c).expect("centres lie in the separator"))
        .collect();
    let d: Vec<f64> = (0..ns * ns).map(|k| ctx.within(i, sep[k / ns], sep[k % ns])).collect();
    // to_sep[x * n + p] = d_{b∘side(p)}(order[p], sep[x]) for p outside S
    let mut to_sep = vec![INF; ns * n];
    for &x in &mid {
        for p in ns..n {
            to_sep[x * n + p] = child_get(side(p), p, x);
        }
    }
    // sep_block[a][y * ns + t] = d_{b∘a}(sep[y], sep[t])
    let sep_block: Vec<Vec<f64>> = (0..2)
        .map(|a| (0..ns * ns).map(|k| child_get(a, k / ns, k % ns)).collect())
        .collect();

    let mut m = NodeMatrix::new(nd, order);
    for x in 0..ns {
        for y in x + 1..ns {
            m.set_sym(x, y, d[x * ns + y]);
        }
    }
    let mut lead = vec![INF; ns];
    let mut row = vec![INF; n];
    for p in ns..n {
        let a = side(p);
        for &y in &mid {
            lead[y] = mid.iter().map(|&x| to_sep[x * n + p] + d[x * ns + y]).fold(INF, f64::min);
        }
        // rule 4 with t in S
        for t in 0..ns {
            let mut best = child_get(a, p, t);
            for &y in &mid {
                best = best.min(lead[y] + sep_block[a][y * ns + t]);
            }
            m.set_sym(p, t, best);
        }
        // rule 4 with both outside S, t after p
        row[p + 1..].fill(INF);
        for &y in &mid {
            let l = lead[y];
            let src = &to_sep[y * n + p + 1..(y + 1) * n];
            for (r, &c) in row[p + 1..].iter_mut().zip(src) {
                *r = r.min(l + c);
            }
        }
        for q in p + 1..n {
            let mut best = row[q];
            if side(q) == a {
                best = best.min(child_get(a, p, q));
            }
            m.set_sym(p, q, best);
        }
    }

    // rules 2 and 3 for the anchors
    let anchors = ctx.anchors(i);
    let is_anchor = |v: Vertex| anchors.binary_search(&v).is_ok();
    for &v in anchors {
        let pv = m.rank[nd.vertices.binary_search(&v).expect("anchor lies in V_b")];
        let link: Vec<f64> = if pv < ns {
            (0..ns).map(|x| d[x * ns + pv]).collect()
        } else {
            (0..ns).map(|x| ctx.cross(i, sep[x], v)).collect()
        };
        if pv >= ns {
            for (x, &l) in link.iter().enumerate() {
                m.set_sym(x, pv, l);
            }
        }
        for p in ns..n {
            if p == pv {
                continue;
            }
            let u = m.order[p];
            if is_anchor(u) && (pv < ns || u > v) {
                continue;
            }
            let a = side(p);
            let mut best = if pv < ns || side(pv) == a { child_get(a, p, pv) } else { INF };
            for &x in &mid {
                best = best.min(to_sep[x * n + p] + link[x]);
            }
            m.set_sym(p, pv, best);
        }
    }
    m
}

/// Estimates of all pairs, computed bottom-up over the tree with the same
/// rules and arithmetic order as [`recursive_apsd`].
pub fn apsd_all(ctx: &QueryContext<'_>) -> DistanceMatrix {
    let tree = ctx.tree;
    let mut mats: Vec<Option<NodeMatrix>> = (0..tree.len()).map(|_| None).collect();
    for i in tree.post_order() {
        let m = match tree.nodes[i].children {
            None => leaf_matrix(ctx, i),
            Some([a, b]) => {
                let kids = [
                    mats[a].take().expect("child computed first"),
                    mats[b].take().expect("child computed first"),
                ];
                internal_matrix(ctx, i, kids)
            }
        };
        mats[i] = Some(m);
    }
    let root = mats[0].take().expect("root computed");
    let n = tree.n;
    let mut out = DistanceMatrix::filled(n, INF);
    for (p, &u) in root.order.iter().enumerate() {
        for (q, &v) in root.order.iter().enumerate() {
            out.set(u, v, root.get(p, q));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{build_tree, SeparatorStrategy, TreeParams};
    use crate::graph::{exact_apsd, WeightedGraph};
    use crate::privacy::PrivacyBudget;
    use crate::shortcuts::{build_shortcuts_covering, build_shortcuts_general, NoiseSetting};

    fn grid(rows: usize, cols: usize) -> WeightedGraph {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1, 0.5 + ((v * 7) % 5) as f64 / 10.0));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols, 0.5 + ((v * 3) % 4) as f64 / 8.0));
                }
            }
        }
        WeightedGraph::new(rows * cols, edges, Some(1.0)).unwrap()
    }

    fn budget() -> PrivacyBudget {
        PrivacyBudget::approximate(0.5, 1e-5)
    }

    #[test]
    fn zero_noise_general_is_exact() {
        let g = grid(7, 6);
        let t = build_tree(&g, &TreeParams::default(), &SeparatorStrategy::GridAxis).unwrap();
        let table = build_shortcuts_general(&g, &t, &budget(), 3, NoiseSetting::Zero).unwrap();
        let ctx = QueryContext::new(&t, &table);
        let est = apsd_all(&ctx);
        assert!(est.max_abs_diff(&exact_apsd(&g)) <= 1e-9);
    }

    #[test]
    fn top_down_matches_bottom_up_bitwise() {
        let g = grid(6, 6);
        let t = build_tree(&g, &TreeParams::default(), &SeparatorStrategy::GridAxis).unwrap();
        for table in [
            build_shortcuts_general(&g, &t, &budget(), 5, NoiseSetting::Calibrated).unwrap(),
            build_shortcuts_covering(&g, &t, &budget(), 2, 5, NoiseSetting::Calibrated).unwrap(),
        ] {
            let mut ctx = QueryContext::new(&t, &table);
            let all = apsd_all(&ctx);
            for s in 0..g.n() {
                for u in 0..g.n() {
                    let v = query_pair(&mut ctx, s, u).unwrap();
                    assert_eq!(v.to_bits(), all.get(s, u).to_bits(), "pair ({s}, {u})");
                }
            }
            assert_eq!(ctx.evaluations as usize, ctx.memo_len());
        }
    }

    #[test]
    fn fail_on_direct_misuse() {
        let g = grid(6, 6);
        let t = build_tree(&g, &TreeParams::default(), &SeparatorStrategy::GridAxis).unwrap();
        let table = build_shortcuts_general(&g, &t, &budget(), 5, NoiseSetting::Zero).unwrap();
        let mut ctx = QueryContext::new(&t, &table);
        let [c0, _] = t.root().children.unwrap();
        let child = &t.nodes[c0];
        let outside: Vec<_> = child.vertices.iter().copied().filter(|v| !t.root().in_separator(*v)).collect();
        let err = recursive_apsd(&mut ctx, c0, outside[0], outside[1], 1);
        assert!(matches!(err, Err(ApsdError::Fail { .. })), "{err:?}");
        assert!(matches!(query_pair(&mut ctx, 0, 99), Err(ApsdError::VertexOutOfRange { .. })));
        assert_eq!(query_pair(&mut ctx, 4, 4), Ok(0.0));
    }

    #[test]
    fn disconnected_pairs_are_infinite() {
        let g = WeightedGraph::new(10, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (5, 6, 1.0), (6, 7, 2.0), (7, 8, 1.0), (8, 9, 1.0)], None)
            .unwrap();
        let t = build_tree(&g, &TreeParams::default(), &SeparatorStrategy::BfsLevel).unwrap();
        let table = build_shortcuts_general(&g, &t, &budget(), 1, NoiseSetting::Calibrated).unwrap();
        let est = apsd_all(&QueryContext::new(&t, &table));
        assert_eq!(est.get(0, 9), f64::INFINITY);
        assert_eq!(est.get(4, 5), f64::INFINITY);
        assert!(est.get(5, 9).is_finite());
    }
}

// SPDX-License-Identifier: Apache-2.0

//! Small graph families shared by the integration tests.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sepapsd_core::{SeparatorStrategy, WeightedGraph};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn weight(rng: &mut ChaCha8Rng, cap: f64) -> f64 {
    rng.gen_range(0.0..=cap)
}

pub fn path(n: usize, cap: f64, seed: u64) -> WeightedGraph {
    let mut r = rng(seed);
    WeightedGraph::new(n, (1..n).map(|i| (i - 1, i, weight(&mut r, cap))).collect::<Vec<_>>(), Some(cap)).unwrap()
}

pub fn random_tree(n: usize, cap: f64, seed: u64) -> WeightedGraph {
    let mut r = rng(seed);
    let edges: Vec<_> = (1..n).map(|i| (r.gen_range(0..i), i, weight(&mut r, cap))).collect();
    WeightedGraph::new(n, edges, Some(cap)).unwrap()
}

pub fn grid(rows: usize, cols: usize, cap: f64, seed: u64) -> WeightedGraph {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for row in 0..rows {
        for c in 0..cols {
            let v = row * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1, weight(&mut r, cap)));
            }
            if row + 1 < rows {
                edges.push((v, v + cols, weight(&mut r, cap)));
            }
        }
    }
    WeightedGraph::new(rows * cols, edges, Some(cap)).unwrap()
}

/// Largest component of a grid with a random fifth of its vertices removed,
/// relabelled to `0..m` in row-major order.
pub fn subgrid(rows: usize, cols: usize, cap: f64, seed: u64) -> WeightedGraph {
    let mut r = rng(seed);
    let n = rows * cols;
    let keep: Vec<bool> = (0..n).map(|_| r.gen_range(0.0..1.0) >= 0.2).collect();
    let mut label = vec![usize::MAX; n];
    let mut best: Vec<usize> = Vec::new();
    for start in 0..n {
        if !keep[start] || label[start] != usize::MAX {
            continue;
        }
        let mut comp = vec![start];
        label[start] = start;
        let mut i = 0;
        while i < comp.len() {
            let v = comp[i];
            i += 1;
            let (row, c) = (v / cols, v % cols);
            let mut nbrs = Vec::new();
            if c > 0 {
                nbrs.push(v - 1);
            }
            if c + 1 < cols {
                nbrs.push(v + 1);
            }
            if row > 0 {
                nbrs.push(v - cols);
            }
            if row + 1 < rows {
                nbrs.push(v + cols);
            }
            for u in nbrs {
                if keep[u] && label[u] == usize::MAX {
                    label[u] = start;
                    comp.push(u);
                }
            }
        }
        if comp.len() > best.len() {
            best = comp;
        }
    }
    if best.is_empty() {
        best.push(0);
    }
    best.sort_unstable();
    let index = |v: usize| best.binary_search(&v).ok();
    let mut edges = Vec::new();
    for &v in &best {
        let (row, c) = (v / cols, v % cols);
        if c + 1 < cols {
            if let Some(j) = index(v + 1) {
                edges.push((index(v).unwrap(), j, weight(&mut r, cap)));
            }
        }
        if row + 1 < rows {
            if let Some(j) = index(v + cols) {
                edges.push((index(v).unwrap(), j, weight(&mut r, cap)));
            }
        }
    }
    WeightedGraph::new(best.len(), edges, Some(cap)).unwrap()
}

/// A mixed corpus of `count` graphs with at most `max_n` vertices, each
/// paired with the strategy suited to its family.
pub fn corpus(count: usize, max_n: usize, seed: u64) -> Vec<(String, WeightedGraph, SeparatorStrategy)> {
    let mut r = rng(seed);
    let side = (max_n as f64).sqrt() as usize;
    (0..count)
        .map(|i| {
            let s = r.gen::<u64>();
            match i % 4 {
                0 => {
                    let n = r.gen_range(1..=max_n);
                    (format!("path n={n}"), path(n, 1.0, s), SeparatorStrategy::PathMidpoint)
                }
                1 => {
                    let n = r.gen_range(1..=max_n);
                    (format!("tree n={n}"), random_tree(n, 1.0, s), SeparatorStrategy::TreeCentroid)
                }
                2 => {
                    let (a, b) = (r.gen_range(1..=side), r.gen_range(1..=side));
                    (format!("grid {a}x{b}"), grid(a, b, 1.0, s), SeparatorStrategy::GridAxis)
                }
                _ => {
                    let (a, b) = (r.gen_range(2..=side), r.gen_range(2..=side));
                    (format!("subgrid {a}x{b}"), subgrid(a, b, 1.0, s), SeparatorStrategy::BfsLevel)
                }
            }
        })
        .collect()
}

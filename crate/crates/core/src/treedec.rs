// SPDX-License-Identifier: Apache-2.0

//! Externally supplied tree decompositions.
//!
//! Text format: line 1 is the bag count `nb`, then `nb` lines
//! `bag_id k v1 .. vk`, then the tree edges as `bag_i bag_j` lines.
//! Only the bags are used for separator search; the tree edges are parsed
//! and range-checked but otherwise informational, since every candidate
//! separator is validated against the graph anyway.

use std::path::Path;

use crate::graph::Vertex;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDecomposition {
    pub bags: Vec<Vec<Vertex>>,
    pub tree_edges: Vec<(usize, usize)>,
}

impl TreeDecomposition {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line, first) = lines.next().ok_or("empty tree decomposition")?;
        let nb: usize = first.parse().map_err(|_| format!("line {line}: bad bag count `{first}`"))?;
        let mut bags: Vec<Option<Vec<Vertex>>> = vec![None; nb];
        for _ in 0..nb {
            let (line, text) = lines.next().ok_or("fewer bag lines than declared")?;
            let nums = parse_numbers(text, line)?;
            if nums.len() < 2 || nums.len() != nums[1] + 2 {
                return Err(format!("line {line}: expected `bag_id k v1 .. vk`"));
            }
            let id = nums[0];
            if id >= nb {
                return Err(format!("line {line}: bag id {id} out of range"));
            }
            if bags[id].is_some() {
                return Err(format!("line {line}: bag {id} declared twice"));
            }
            let mut bag = nums[2..].to_vec();
            bag.sort_unstable();
            bag.dedup();
            bags[id] = Some(bag);
        }
        let mut tree_edges = Vec::new();
        for (line, text) in lines {
            let nums = parse_numbers(text, line)?;
            if nums.len() != 2 || nums[0] >= nb || nums[1] >= nb {
                return Err(format!("line {line}: expected `bag_i bag_j` with ids below {nb}"));
            }
            tree_edges.push((nums[0], nums[1]));
        }
        Ok(TreeDecomposition {
            bags: bags.into_iter().map(|b| b.expect("every bag id declared")).collect(),
            tree_edges,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, String> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| e.to_string())?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.bags.len());
        for (id, bag) in self.bags.iter().enumerate() {
            out.push_str(&format!("{id} {}", bag.len()));
            for v in bag {
                out.push_str(&format!(" {v}"));
            }
            out.push('\n');
        }
        for (a, b) in &self.tree_edges {
            out.push_str(&format!("{a} {b}\n"));
        }
        out
    }
}

fn parse_numbers(text: &str, line: usize) -> Result<Vec<usize>, String> {
    text.split_whitespace()
        .map(|t| t.parse().map_err(|_| format!("line {line}: cannot parse `{t}`")))
        .collect()
}

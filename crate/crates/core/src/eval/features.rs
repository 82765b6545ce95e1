//! Hashed sparse features of a state graph.
//!
//! Feature keys are byte strings hashed with 64-bit FNV-1a and reduced
//! modulo the feature dimension. Counts are accumulated per slot and the
//! vector is scaled to unit L2 norm. Keys:
//!
//! * `E|parent|child|pos` for every edge between term nodes;
//! * `F|parent|child|pos` for edges inside the first goal;
//! * `H|symbol|arity` for each goal's head and `H0|symbol|arity` for the
//!   first goal's head;
//! * `T|parent|child|pos` for edges inside the theorem;
//! * `S|label` for variables occurring more than once;
//! * `G|n`, goal count (capped at 16), and `Z|k`, `floor(log2(size + 1))`;
//! * `M|mover` and the bias key `B`.

use std::collections::BTreeMap;

use super::graph::{NodeKind, StateGraph};

pub const DEFAULT_FEATURE_DIM: usize = 1 << 16;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Sorted `(slot, value)` pairs with unit L2 norm.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseFeatures {
    pub entries: Vec<(u32, f64)>,
}

impl SparseFeatures {
    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, x)| x * weights[i as usize]).sum()
    }
}

struct Acc {
    dim: usize,
    counts: BTreeMap<u32, f64>,
}

impl Acc {
    fn add(&mut self, key: &str) {
        let slot = (fnv1a(key.as_bytes()) % self.dim as u64) as u32;
        *self.counts.entry(slot).or_insert(0.0) += 1.0;
    }
}

fn subtree(children: &[Vec<usize>], root: usize, out: &mut Vec<bool>) {
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        if !out[n] {
            out[n] = true;
            stack.extend(&children[n]);
        }
    }
}

pub fn feature_extract(graph: &StateGraph, dim: usize) -> SparseFeatures {
    let mut acc = Acc {
        dim,
        counts: BTreeMap::new(),
    };
    let label = |i: usize| graph.nodes[i].label.as_str();
    let children = graph.children();
    let n = graph.nodes.len();
    let mut first_goal = vec![false; n];
    if let Some(&r) = graph.goal_roots.first() {
        subtree(&children, r, &mut first_goal);
    }
    let mut theorem = vec![false; n];
    if let Some(r) = graph.theorem_root {
        subtree(&children, r, &mut theorem);
    }
    let mut in_degree = vec![0usize; n];
    for &(p, c, pos) in &graph.edges {
        in_degree[c] += 1;
        if graph.nodes[p].kind == NodeKind::RootMarker {
            continue;
        }
        acc.add(&format!("E|{}|{}|{pos}", label(p), label(c)));
        if first_goal[p] {
            acc.add(&format!("F|{}|{}|{pos}", label(p), label(c)));
        }
        if theorem[p] {
            acc.add(&format!("T|{}|{}|{pos}", label(p), label(c)));
        }
    }
    for (i, &r) in graph.goal_roots.iter().enumerate() {
        let key = format!("{}|{}", label(r), children[r].len());
        acc.add(&format!("H|{key}"));
        if i == 0 {
            acc.add(&format!("H0|{key}"));
        }
    }
    for (i, node) in graph.nodes.iter().enumerate() {
        if node.kind == NodeKind::Variable && in_degree[i] > 1 {
            acc.add(&format!("S|{}", node.label));
        }
    }
    let size = graph.nodes.iter().filter(|x| x.kind != NodeKind::RootMarker).count();
    acc.add(&format!("G|{}", graph.goal_roots.len().min(16)));
    acc.add(&format!("Z|{}", (size as f64 + 1.0).log2().floor() as u32));
    acc.add(&format!("M|{}", graph.mover.as_str()));
    acc.add("B");
    let norm = acc.counts.values().map(|x| x * x).sum::<f64>().sqrt();
    SparseFeatures {
        entries: acc.counts.into_iter().map(|(i, x)| (i, x / norm)).collect(),
    }
}

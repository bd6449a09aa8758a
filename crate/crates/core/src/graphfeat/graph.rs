use std::collections::HashMap;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::windowing::Interval;

/// How repeated packets between the same pair of hosts are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GraphMode {
    /// One directed edge per packet.
    #[default]
    Multigraph,
    /// One directed edge per host pair, weighted by packet count.
    Weighted,
}

impl GraphMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            GraphMode::Multigraph => "multi",
            GraphMode::Weighted => "weighted",
        }
    }
}

impl std::str::FromStr for GraphMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "multi" | "multigraph" => Ok(GraphMode::Multigraph),
            "weighted" => Ok(GraphMode::Weighted),
            other => Err(format!("unknown graph mode {other:?} (expected multi or weighted)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Arcs {
    Multi(Vec<(u32, u32)>),
    Weighted(Vec<(u32, u32, u64)>),
}

/// Directed communication graph of one interval.
///
/// Nodes are indexed `0..n` in ascending address order. Self-loops are
/// dropped from the edge set, but a host seen only talking to itself stays a
/// node (with no edges). Alongside the packet-level arcs the graph keeps the
/// simple underlying digraph (distinct successors and predecessors) used by
/// path-based features.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalGraph {
    nodes: Vec<Ipv4Addr>,
    arcs: Arcs,
    succ: Vec<Vec<u32>>,
    pred: Vec<Vec<u32>>,
    out_weight: Vec<u64>,
    in_weight: Vec<u64>,
}

impl IntervalGraph {
    pub fn from_pairs<I>(pairs: I, mode: GraphMode) -> Self
    where
        I: IntoIterator<Item = (Ipv4Addr, Ipv4Addr)>,
        I::IntoIter: Clone,
    {
        let pairs = pairs.into_iter();
        let mut nodes: Vec<Ipv4Addr> = pairs.clone().flat_map(|(s, d)| [s, d]).collect();
        nodes.sort_unstable();
        nodes.dedup();
        let index: HashMap<Ipv4Addr, u32> = nodes
            .iter()
            .enumerate()
            .map(|(i, a)| (*a, i as u32))
            .collect();
        let n = nodes.len();
        let mut out_weight = vec![0u64; n];
        let mut in_weight = vec![0u64; n];

        let indexed = pairs
            .map(|(s, d)| (index[&s], index[&d]))
            .filter(|(u, v)| u != v);
        let (arcs, mut simple) = match mode {
            GraphMode::Multigraph => {
                let list: Vec<(u32, u32)> = indexed.collect();
                for &(u, v) in &list {
                    out_weight[u as usize] += 1;
                    in_weight[v as usize] += 1;
                }
                let mut simple = list.clone();
                simple.sort_unstable();
                simple.dedup();
                (Arcs::Multi(list), simple)
            }
            GraphMode::Weighted => {
                let mut counts: HashMap<(u32, u32), u64> = HashMap::new();
                for (u, v) in indexed {
                    *counts.entry((u, v)).or_insert(0) += 1;
                }
                let mut list: Vec<(u32, u32, u64)> =
                    counts.into_iter().map(|((u, v), w)| (u, v, w)).collect();
                list.sort_unstable();
                for &(u, v, w) in &list {
                    out_weight[u as usize] += w;
                    in_weight[v as usize] += w;
                }
                let simple = list.iter().map(|&(u, v, _)| (u, v)).collect();
                (Arcs::Weighted(list), simple)
            }
        };

        simple.sort_unstable();
        let mut succ = vec![Vec::new(); n];
        let mut pred = vec![Vec::new(); n];
        for &(u, v) in &simple {
            succ[u as usize].push(v);
            pred[v as usize].push(u);
        }
        for p in pred.iter_mut() {
            p.sort_unstable();
        }

        Self {
            nodes,
            arcs,
            succ,
            pred,
            out_weight,
            in_weight,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Ipv4Addr] {
        &self.nodes
    }

    pub fn index_of(&self, host: Ipv4Addr) -> Option<usize> {
        self.nodes.binary_search(&host).ok()
    }

    pub fn mode(&self) -> GraphMode {
        match self.arcs {
            Arcs::Multi(_) => GraphMode::Multigraph,
            Arcs::Weighted(_) => GraphMode::Weighted,
        }
    }

    /// Stored edges: packets in multigraph mode, distinct pairs in weighted mode.
    pub fn edge_count(&self) -> usize {
        match &self.arcs {
            Arcs::Multi(a) => a.len(),
            Arcs::Weighted(a) => a.len(),
        }
    }

    /// Total packet count carried by the edges (self-loops excluded).
    pub fn total_weight(&self) -> u64 {
        self.out_weight.iter().sum()
    }

    /// Edges condensed to `(src, dst, count)`, sorted.
    pub fn weighted_edges(&self) -> Vec<(usize, usize, u64)> {
        match &self.arcs {
            Arcs::Weighted(a) => a.iter().map(|&(u, v, w)| (u as usize, v as usize, w)).collect(),
            Arcs::Multi(a) => {
                let mut sorted = a.clone();
                sorted.sort_unstable();
                let mut out: Vec<(usize, usize, u64)> = Vec::new();
                for (u, v) in sorted {
                    match out.last_mut() {
                        Some(last) if last.0 == u as usize && last.1 == v as usize => last.2 += 1,
                        _ => out.push((u as usize, v as usize, 1)),
                    }
                }
                out
            }
        }
    }

    /// Calls `f(src, dst, weight)` for each stored arc, in a fixed order.
    #[inline]
    pub fn for_each_arc(&self, mut f: impl FnMut(usize, usize, f64)) {
        match &self.arcs {
            Arcs::Multi(a) => {
                for &(u, v) in a {
                    f(u as usize, v as usize, 1.0);
                }
            }
            Arcs::Weighted(a) => {
                for &(u, v, w) in a {
                    f(u as usize, v as usize, w as f64);
                }
            }
        }
    }

    /// Distinct successors of `u`, ascending.
    pub fn successors(&self, u: usize) -> &[u32] {
        &self.succ[u]
    }

    /// Distinct predecessors of `v`, ascending.
    pub fn predecessors(&self, v: usize) -> &[u32] {
        &self.pred[v]
    }

    pub fn out_weight(&self, u: usize) -> u64 {
        self.out_weight[u]
    }

    pub fn in_weight(&self, v: usize) -> u64 {
        self.in_weight[v]
    }

    /// Whether the simple digraph has no directed cycle.
    pub fn is_acyclic(&self) -> bool {
        let n = self.node_count();
        let mut indeg: Vec<usize> = (0..n).map(|v| self.pred[v].len()).collect();
        let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut removed = 0;
        while let Some(u) = stack.pop() {
            removed += 1;
            for &v in &self.succ[u] {
                let v = v as usize;
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    stack.push(v);
                }
            }
        }
        removed == n
    }
}

/// Builds the communication graph for one interval.
pub fn build_graph(interval: &Interval, mode: GraphMode) -> IntervalGraph {
    IntervalGraph::from_pairs(interval.events.iter().map(|e| (e.src, e.dst)), mode)
}

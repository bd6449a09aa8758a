//! Independent reference implementations used by the integration tests.
//!
//! Everything here works on dense matrices built straight from the packet
//! pairs, without touching the library's graph type.
#![allow(dead_code, clippy::needless_range_loop)]

use std::net::Ipv4Addr;

use botgraph::graphfeat::{raw_features, IntervalGraph, FEATURE_COUNT, FEATURE_NAMES};
use botgraph::{ConvergenceConfig, GraphMode};
use rand::Rng;

pub fn ip(k: usize) -> Ipv4Addr {
    Ipv4Addr::new(10, 0, 0, k as u8 + 1)
}

/// Up to `max_nodes` hosts, up to `3 n` packets, occasional self-loops
/// and repeated pairs.
pub fn random_pairs(rng: &mut impl Rng, max_nodes: usize) -> Vec<(Ipv4Addr, Ipv4Addr)> {
    let n = rng.gen_range(1..=max_nodes);
    let m = rng.gen_range(1..=3 * n);
    (0..m)
        .map(|_| {
            let u = rng.gen_range(0..n);
            let v = if rng.gen_bool(0.1) { u } else { rng.gen_range(0..n) };
            (ip(u), ip(v))
        })
        .collect()
}

/// Packet counts `w[u][v]` for `u != v`, nodes in address order.
pub struct Dense {
    pub nodes: Vec<Ipv4Addr>,
    pub w: Vec<Vec<f64>>,
}

impl Dense {
    pub fn new(pairs: &[(Ipv4Addr, Ipv4Addr)]) -> Self {
        let mut nodes: Vec<Ipv4Addr> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        nodes.sort();
        nodes.dedup();
        let n = nodes.len();
        let pos = |a: Ipv4Addr| nodes.iter().position(|&x| x == a).unwrap();
        let mut w = vec![vec![0.0; n]; n];
        for &(a, b) in pairs {
            if a != b {
                w[pos(a)][pos(b)] += 1.0;
            }
        }
        Self { nodes, w }
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    fn adj(&self, u: usize, v: usize) -> bool {
        self.w[u][v] > 0.0
    }
}

/// Counts every shortest path by explicit enumeration.
pub fn brute_betweenness(g: &Dense) -> Vec<f64> {
    let n = g.n();
    let mut score = vec![0.0; n];
    if n < 3 {
        return score;
    }
    // All-pairs hop distances by repeated relaxation.
    let inf = usize::MAX;
    let mut dist = vec![vec![inf; n]; n];
    for (u, row) in dist.iter_mut().enumerate() {
        row[u] = 0;
        for v in 0..n {
            if g.adj(u, v) {
                row[v] = row[v].min(1);
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if dist[i][k] != inf && dist[k][j] != inf && dist[i][k] + dist[k][j] < dist[i][j] {
                    dist[i][j] = dist[i][k] + dist[k][j];
                }
            }
        }
    }
    fn walk(g: &Dense, dist: &[Vec<usize>], path: &mut Vec<usize>, t: usize, out: &mut Vec<Vec<usize>>) {
        let u = *path.last().unwrap();
        if u == t {
            out.push(path.clone());
            return;
        }
        for v in 0..g.n() {
            if g.adj(u, v) && dist[v][t] != usize::MAX && dist[v][t] + 1 == dist[u][t] {
                path.push(v);
                walk(g, dist, path, t, out);
                path.pop();
            }
        }
    }
    for s in 0..n {
        for t in 0..n {
            if s == t || dist[s][t] == inf {
                continue;
            }
            let mut paths = Vec::new();
            walk(g, &dist, &mut vec![s], t, &mut paths);
            let total = paths.len() as f64;
            for (v, sc) in score.iter_mut().enumerate() {
                if v == s || v == t {
                    continue;
                }
                let through = paths.iter().filter(|p| p.contains(&v)).count();
                *sc += through as f64 / total;
            }
        }
    }
    let norm = ((n - 1) * (n - 2)) as f64;
    score.iter().map(|s| s / norm).collect()
}

/// Directed links among the in-or-out neighborhood over `d (d - 1)`.
pub fn brute_clustering(g: &Dense) -> Vec<f64> {
    let n = g.n();
    (0..n)
        .map(|v| {
            let nb: Vec<usize> = (0..n).filter(|&u| u != v && (g.adj(u, v) || g.adj(v, u))).collect();
            let d = nb.len();
            if d < 2 {
                return 0.0;
            }
            let mut links = 0;
            for &a in &nb {
                for &b in &nb {
                    if a != b && g.adj(a, b) {
                        links += 1;
                    }
                }
            }
            links as f64 / (d * (d - 1)) as f64
        })
        .collect()
}

/// Solves `(I - d S) r = (1 - d) / n` directly, where column `u` of `S`
/// is `u`'s out-weight distribution, or uniform when `u` has none.
pub fn dense_pagerank(g: &Dense, damping: f64) -> Vec<f64> {
    let n = g.n();
    let nf = n as f64;
    let mut a = vec![vec![0.0; n + 1]; n];
    for u in 0..n {
        let out: f64 = g.w[u].iter().sum();
        for v in 0..n {
            let s = if out > 0.0 { g.w[u][v] / out } else { 1.0 / nf };
            a[v][u] -= damping * s;
        }
    }
    for (v, row) in a.iter_mut().enumerate() {
        row[v] += 1.0;
        row[n] = (1.0 - damping) / nf;
    }
    solve(a)
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=n {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

fn normalized(x: Vec<f64>) -> Option<Vec<f64>> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    (norm > 0.0).then(|| x.into_iter().map(|v| v / norm).collect())
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Eigenvector centrality by dense shifted power iteration on the
/// in-neighbor matrix. `None` when `A^n = 0`, i.e. the graph has no cycle.
pub fn dense_eigenvector(g: &Dense, eps: f64, max_iters: usize) -> Option<Vec<f64>> {
    let n = g.n();
    // a[v][u] = weight u -> v
    let a: Vec<Vec<f64>> = (0..n).map(|v| (0..n).map(|u| g.w[u][v]).collect()).collect();
    let mut p = a.clone();
    for _ in 1..n {
        p = matmul(&p, &a);
    }
    if p.iter().flatten().all(|&x| x == 0.0) {
        return None;
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..max_iters {
        let ax: Vec<f64> = (0..n).map(|v| (0..n).map(|u| a[v][u] * x[u]).sum()).collect();
        let shift = ax.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y = normalized(ax.iter().zip(&x).map(|(p, q)| p + shift * q).collect())?;
        let done = l2(&x, &y) < eps;
        x = y;
        if done {
            return Some(x);
        }
    }
    panic!("dense eigenvector oracle did not converge");
}

/// HITS by dense alternating iteration, `(authority, hub)`; `None` without edges.
pub fn dense_hits(g: &Dense, eps: f64, max_iters: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = g.n();
    if g.w.iter().flatten().all(|&x| x == 0.0) {
        return None;
    }
    let mut hub = vec![1.0 / (n as f64).sqrt(); n];
    let mut auth = vec![0.0; n];
    for _ in 0..max_iters {
        let a = normalized((0..n).map(|v| (0..n).map(|u| g.w[u][v] * hub[u]).sum()).collect())?;
        let h = normalized((0..n).map(|u| (0..n).map(|v| g.w[u][v] * a[v]).sum()).collect())?;
        let done = l2(&a, &auth).max(l2(&h, &hub)) < eps;
        auth = a;
        hub = h;
        if done {
            return Some((auth, hub));
        }
    }
    panic!("dense HITS oracle did not converge");
}

/// Configuration for oracle comparisons: far tighter than the default so
/// that stopping points, not arithmetic, dominate the difference.
pub fn tight() -> ConvergenceConfig {
    ConvergenceConfig {
        epsilon: 1e-12,
        max_iters: 10_000_000,
        damping: 0.85,
    }
}

/// Largest deviation found in one graph, per feature.
#[derive(Debug, Default, Clone, Copy)]
pub struct Deviation {
    pub exact: f64,
    pub spectral: f64,
}

/// All ten raw features of every node, computed by the oracles alone.
pub struct OracleRows {
    pub nodes: Vec<Ipv4Addr>,
    pub rows: Vec<[f64; FEATURE_COUNT]>,
    pub eigenvector_degenerate: bool,
    pub hits_degenerate: bool,
}

pub fn oracle_rows(pairs: &[(Ipv4Addr, Ipv4Addr)], cfg: &ConvergenceConfig) -> OracleRows {
    let dense = Dense::new(pairs);
    let n = dense.n();
    let btw = brute_betweenness(&dense);
    let clu = brute_clustering(&dense);
    let pr = dense_pagerank(&dense, cfg.damping);
    let eig = dense_eigenvector(&dense, cfg.epsilon, cfg.max_iters);
    let hits = dense_hits(&dense, cfg.epsilon, cfg.max_iters);
    let rows = (0..n)
        .map(|v| {
            [
                dense.w[v].iter().sum(),
                (0..n).map(|u| dense.w[u][v]).sum(),
                (0..n).filter(|&u| dense.adj(v, u)).count() as f64,
                (0..n).filter(|&u| dense.adj(u, v)).count() as f64,
                pr[v],
                btw[v],
                eig.as_ref().map_or(0.0, |e| e[v]),
                hits.as_ref().map_or(0.0, |h| h.0[v]),
                hits.as_ref().map_or(0.0, |h| h.1[v]),
                clu[v],
            ]
        })
        .collect();
    OracleRows {
        nodes: dense.nodes,
        rows,
        eigenvector_degenerate: eig.is_none(),
        hits_degenerate: hits.is_none(),
    }
}

/// Compares every raw feature of every node against the oracles.
/// Degree counts and the two combinatorial features are "exact"; the three
/// iterative ones are "spectral".
pub fn compare_raw(pairs: &[(Ipv4Addr, Ipv4Addr)], mode: GraphMode) -> Result<Deviation, String> {
    let cfg = tight();
    let oracle = oracle_rows(pairs, &cfg);
    let g = IntervalGraph::from_pairs(pairs.to_vec(), mode);
    if g.nodes() != oracle.nodes.as_slice() {
        return Err("node sets differ".into());
    }
    let raw = raw_features(&g, &cfg).map_err(|e| e.to_string())?;
    if raw.eigenvector_degenerate != oracle.eigenvector_degenerate {
        return Err(format!(
            "eigenvector degeneracy: library {} oracle {}",
            raw.eigenvector_degenerate, oracle.eigenvector_degenerate
        ));
    }
    if raw.hits_degenerate != oracle.hits_degenerate {
        return Err(format!("HITS degeneracy: library {} oracle {}", raw.hits_degenerate, oracle.hits_degenerate));
    }
    let mut dev = Deviation::default();
    for (got, expect) in raw.rows.iter().zip(&oracle.rows) {
        for k in 0..FEATURE_COUNT {
            let diff = (got[k] - expect[k]).abs();
            match FEATURE_NAMES[k] {
                "pagerank" | "eigenvector" | "authority" | "hub" => dev.spectral = dev.spectral.max(diff),
                _ => dev.exact = dev.exact.max(diff),
            }
        }
    }
    Ok(dev)
}

/// Mann-Whitney statistic by comparing every positive with every negative.
pub fn pairwise_auroc(scored: &[(f64, bool)]) -> f64 {
    let pos: Vec<f64> = scored.iter().filter(|s| s.1).map(|s| s.0).collect();
    let neg: Vec<f64> = scored.iter().filter(|s| !s.1).map(|s| s.0).collect();
    let mut wins = 0.0;
    for &p in &pos {
        for &q in &neg {
            if p > q {
                wins += 1.0;
            } else if p == q {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

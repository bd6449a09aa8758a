use super::{ConvergenceConfig, IntervalGraph};
use crate::error::{Error, Result};

/// Damped PageRank with uniform teleport.
///
/// Out-links share a node's rank in proportion to edge weight (packet
/// count). Dangling nodes spread their rank uniformly. Iteration stops when
/// the L1 change falls below `cfg.epsilon`.
pub fn pagerank(g: &IntervalGraph, cfg: &ConvergenceConfig) -> Result<Vec<f64>> {
    let n = g.node_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    let nf = n as f64;
    let d = cfg.damping;
    let out_w: Vec<f64> = (0..n).map(|u| g.out_weight(u) as f64).collect();
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut share = vec![0.0; n];
    let mut residual = f64::INFINITY;

    for _ in 0..cfg.max_iters {
        let mut dangling = 0.0;
        for u in 0..n {
            if out_w[u] > 0.0 {
                share[u] = d * rank[u] / out_w[u];
            } else {
                share[u] = 0.0;
                dangling += rank[u];
            }
        }
        let base = (1.0 - d) / nf + d * dangling / nf;
        next.iter_mut().for_each(|x| *x = base);
        g.for_each_arc(|u, v, w| next[v] += share[u] * w);

        residual = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if residual < cfg.epsilon {
            return Ok(rank);
        }
    }
    Err(Error::Convergence {
        interval: None,
        feature: "pagerank",
        iterations: cfg.max_iters,
        residual,
    })
}

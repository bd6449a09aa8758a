//! Power-method centralities: eigenvector, HITS authority and hub.

use super::{ConvergenceConfig, IntervalGraph};
use crate::error::{Error, Result};

/// Unit-norm score vector, or all zeros with `degenerate` set when the
/// iteration has no support.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerScores {
    pub scores: Vec<f64>,
    pub degenerate: bool,
}

impl PowerScores {
    fn zeros(n: usize) -> Self {
        Self {
            scores: vec![0.0; n],
            degenerate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HitsScores {
    pub authority: Vec<f64>,
    pub hub: Vec<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralScores {
    pub eigenvector: PowerScores,
    pub hits: HitsScores,
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Eigenvector centrality: node score proportional to the weighted sum of
/// its in-neighbors' scores (`x ← A x`, `A[v][u]` = packets u→v).
///
/// Iterates `x ← (A + λ I) x / ‖·‖` with `λ = ‖A x‖`, which has the same
/// dominant eigenvector as `A` but does not oscillate on periodic graphs.
/// An acyclic graph is nilpotent, so plain iteration collapses to zero;
/// that case returns zeros flagged degenerate.
pub fn eigenvector(g: &IntervalGraph, cfg: &ConvergenceConfig) -> Result<PowerScores> {
    let n = g.node_count();
    if n == 0 {
        return Ok(PowerScores {
            scores: Vec::new(),
            degenerate: false,
        });
    }
    if g.is_acyclic() {
        return Ok(PowerScores::zeros(n));
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut y = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_iters {
        y.iter_mut().for_each(|v| *v = 0.0);
        g.for_each_arc(|u, v, w| y[v] += w * x[u]);
        let shift = norm2(&y);
        for (yv, xv) in y.iter_mut().zip(&x) {
            *yv += shift * xv;
        }
        let norm = norm2(&y);
        if norm == 0.0 {
            return Ok(PowerScores::zeros(n));
        }
        y.iter_mut().for_each(|v| *v /= norm);
        residual = dist2(&x, &y);
        std::mem::swap(&mut x, &mut y);
        if residual < cfg.epsilon {
            return Ok(PowerScores {
                scores: x,
                degenerate: false,
            });
        }
    }
    Err(Error::Convergence {
        interval: None,
        feature: "eigenvector",
        iterations: cfg.max_iters,
        residual,
    })
}

/// HITS by alternating power iteration: `a ← Aᵀ h`, `h ← A a`, each unit-norm.
///
/// Stops when both vectors move less than `cfg.epsilon` in L2.
pub fn hits(g: &IntervalGraph, cfg: &ConvergenceConfig) -> Result<HitsScores> {
    let n = g.node_count();
    let zeros = |degenerate| HitsScores {
        authority: vec![0.0; n],
        hub: vec![0.0; n],
        degenerate,
    };
    if n == 0 {
        return Ok(zeros(false));
    }
    if g.total_weight() == 0 {
        return Ok(zeros(true));
    }
    let mut hub = vec![1.0 / (n as f64).sqrt(); n];
    let mut auth = vec![0.0; n];
    let mut next_hub = vec![0.0; n];
    let mut next_auth = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_iters {
        next_auth.iter_mut().for_each(|v| *v = 0.0);
        g.for_each_arc(|u, v, w| next_auth[v] += w * hub[u]);
        let na = norm2(&next_auth);
        if na == 0.0 {
            return Ok(zeros(true));
        }
        next_auth.iter_mut().for_each(|v| *v /= na);

        next_hub.iter_mut().for_each(|v| *v = 0.0);
        g.for_each_arc(|u, v, w| next_hub[u] += w * next_auth[v]);
        let nh = norm2(&next_hub);
        if nh == 0.0 {
            return Ok(zeros(true));
        }
        next_hub.iter_mut().for_each(|v| *v /= nh);

        residual = dist2(&auth, &next_auth).max(dist2(&hub, &next_hub));
        std::mem::swap(&mut auth, &mut next_auth);
        std::mem::swap(&mut hub, &mut next_hub);
        if residual < cfg.epsilon {
            return Ok(HitsScores {
                authority: auth,
                hub,
                degenerate: false,
            });
        }
    }
    Err(Error::Convergence {
        interval: None,
        feature: "hits",
        iterations: cfg.max_iters,
        residual,
    })
}

pub fn eigenvector_hits(g: &IntervalGraph, cfg: &ConvergenceConfig) -> Result<SpectralScores> {
    Ok(SpectralScores {
        eigenvector: eigenvector(g, cfg)?,
        hits: hits(g, cfg)?,
    })
}

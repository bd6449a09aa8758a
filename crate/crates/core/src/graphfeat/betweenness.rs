use std::collections::VecDeque;

use super::IntervalGraph;

/// Brandes betweenness over unweighted shortest paths of the simple digraph.
///
/// Scores are divided by `(n - 1)(n - 2)`; graphs with fewer than three
/// nodes score zero everywhere.
pub fn betweenness(g: &IntervalGraph) -> Vec<f64> {
    let n = g.node_count();
    let mut score = vec![0.0; n];
    if n < 3 {
        return score;
    }
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut delta = vec![0.0f64; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut queue = VecDeque::with_capacity(n);

    for s in 0..n {
        sigma.iter_mut().for_each(|x| *x = 0.0);
        dist.iter_mut().for_each(|x| *x = -1);
        delta.iter_mut().for_each(|x| *x = 0.0);
        order.clear();
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in g.successors(v) {
                let w = w as usize;
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                }
            }
        }
        // Predecessors on shortest paths are recovered from distances.
        for &w in order.iter().rev() {
            for &v in g.predecessors(w) {
                let v = v as usize;
                if dist[v] >= 0 && dist[v] + 1 == dist[w] {
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
                }
            }
            if w != s {
                score[w] += delta[w];
            }
        }
    }
    let scale = 1.0 / ((n - 1) as f64 * (n - 2) as f64);
    score.iter_mut().for_each(|x| *x *= scale);
    score
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphfeat::GraphMode;
    use std::net::Ipv4Addr;

    fn ip(last: u8) -> Ipv4Addr {
        Ipv4Addr::new(10, 0, 0, last)
    }

    #[test]
    fn path_middle_is_only_intermediary() {
        let g = IntervalGraph::from_pairs(vec![(ip(1), ip(2)), (ip(2), ip(3))], GraphMode::Multigraph);
        // One pair (A, C) routes through B; normalized by (3-1)(3-2) = 2.
        assert_eq!(betweenness(&g), vec![0.0, 0.5, 0.0]);
    }

    #[test]
    fn three_cycle_is_symmetric() {
        let g = IntervalGraph::from_pairs(
            vec![(ip(1), ip(2)), (ip(2), ip(3)), (ip(3), ip(1))],
            GraphMode::Weighted,
        );
        let b = betweenness(&g);
        assert!(b.iter().all(|&x| (x - b[0]).abs() < 1e-15));
        assert!(b[0] > 0.0);
    }

    #[test]
    fn two_nodes_score_zero() {
        let g = IntervalGraph::from_pairs(vec![(ip(1), ip(2)), (ip(2), ip(1))], GraphMode::Weighted);
        assert_eq!(betweenness(&g), vec![0.0, 0.0]);
    }

    #[test]
    fn multiplicity_is_ignored() {
        let single = vec![(ip(1), ip(2)), (ip(2), ip(3)), (ip(1), ip(4)), (ip(4), ip(3))];
        let mut repeated = single.clone();
        repeated.extend([(ip(1), ip(2)); 5]);
        let a = betweenness(&IntervalGraph::from_pairs(single, GraphMode::Multigraph));
        let b = betweenness(&IntervalGraph::from_pairs(repeated, GraphMode::Multigraph));
        assert_eq!(a, b);
    }
}

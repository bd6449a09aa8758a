use super::IntervalGraph;

/// Local clustering on the simple digraph.
///
/// For a node with `d` distinct neighbors (in or out), the coefficient is
/// the number of directed edges among those neighbors over `d (d - 1)`.
/// Nodes with fewer than two neighbors score zero.
pub fn clustering_coeff(g: &IntervalGraph) -> Vec<f64> {
    let n = g.node_count();
    let mut stamp = vec![usize::MAX; n];
    let mut neighbors: Vec<usize> = Vec::new();
    (0..n)
        .map(|v| {
            neighbors.clear();
            merge_union(g.successors(v), g.predecessors(v), &mut neighbors);
            let d = neighbors.len();
            if d < 2 {
                return 0.0;
            }
            for &u in &neighbors {
                stamp[u] = v;
            }
            let links: usize = neighbors
                .iter()
                .map(|&u| g.successors(u).iter().filter(|&&w| stamp[w as usize] == v).count())
                .sum();
            links as f64 / (d * (d - 1)) as f64
        })
        .collect()
}

fn merge_union(a: &[u32], b: &[u32], out: &mut Vec<usize>) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        out.push(next as usize);
    }
}

use super::IntervalGraph;

/// Per-node `(out_degree, in_degree, out_neighbors, in_neighbors)`.
///
/// Degrees count packets (edge multiplicity); neighbor counts are distinct endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DegreeFeatures {
    pub out_degree: u64,
    pub in_degree: u64,
    pub out_neighbors: usize,
    pub in_neighbors: usize,
}

pub fn degree_features(g: &IntervalGraph) -> Vec<DegreeFeatures> {
    (0..g.node_count())
        .map(|v| DegreeFeatures {
            out_degree: g.out_weight(v),
            in_degree: g.in_weight(v),
            out_neighbors: g.successors(v).len(),
            in_neighbors: g.predecessors(v).len(),
        })
        .collect()
}

mod common;

use botgraph::GraphMode;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{compare_raw, random_pairs};

#[test]
fn features_match_oracles_on_random_small_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut exact, mut spectral) = (0.0f64, 0.0f64);
    for trial in 0..300 {
        let pairs = random_pairs(&mut rng, 8);
        for mode in [GraphMode::Multigraph, GraphMode::Weighted] {
            let d = compare_raw(&pairs, mode).unwrap_or_else(|e| panic!("graph {trial} ({mode:?}): {e}"));
            exact = exact.max(d.exact);
            spectral = spectral.max(d.spectral);
        }
    }
    eprintln!("max deviation: combinatorial {exact:e}, spectral {spectral:e}");
    assert!(exact <= 1e-12, "combinatorial features off by {exact:e}");
    assert!(spectral <= 1e-8, "spectral features off by {spectral:e}");
}

#[test]
fn dense_two_cycles_joined_by_a_bridge() {
    // Equal spectral radius in two components linked one way: the slowest case for power iteration.
    let p = |a: usize, b: usize| (common::ip(a), common::ip(b));
    let pairs = vec![p(0, 1), p(1, 0), p(2, 3), p(3, 2), p(1, 2)];
    let d = compare_raw(&pairs, GraphMode::Weighted).unwrap();
    assert!(d.exact <= 1e-12 && d.spectral <= 1e-8, "{d:?}");
}

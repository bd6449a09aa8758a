//! Fixtures shared by the benchmarks.

use botgraph::synth::{generate, ScenarioSpec};
use botgraph::PacketEvent;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Events of a two hour p2p scenario with `noise_rate` background packets per second.
pub fn capture(noise_rate: f64) -> Vec<PacketEvent> {
    let spec = ScenarioSpec {
        name: "bench".into(),
        noise_rate,
        ..ScenarioSpec::default()
    };
    generate(&spec).expect("valid scenario").events
}

/// `n` scores in `[0, 1)` with roughly one positive in four.
pub fn scored(n: usize, seed: u64) -> Vec<(f64, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (rng.gen(), rng.gen_bool(0.25))).collect()
}

//! Fixtures shared by the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use seedwalk::{generate, sample_seeds, LfrParams, PlantedGraph, SeedSet};

/// Benchmark graph of `n` nodes with mean degree 20 and mixing 0.3.
pub fn planted(n: usize) -> PlantedGraph {
    generate(&LfrParams::new(n, 20.0, 2.0, 2.0, 0.3).with_seed(n as u64))
        .expect("feasible parameters")
}

/// Indicator seeds for a fraction `sigma` of the nodes.
pub fn seeds(pg: &PlantedGraph, sigma: f64) -> SeedSet {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    sample_seeds(pg, sigma, &mut rng)
        .expect("valid sigma")
        .seeds
}

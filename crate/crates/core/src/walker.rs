//! Monte Carlo simulation of absorbed random walks.
//!
//! This is the independent check on the solver: it never touches the
//! linear system, only the chain's neighbour lists.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::detect::SeedSet;
use crate::error::{Error, Result};
use crate::markov::AbsorbingChain;

pub const DEFAULT_STEP_CAP: u64 = 10_000_000;

/// Absorption counts of the walks started at one node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkStats {
    pub start: usize,
    /// Absorbing nodes, ascending; aligned with `counts`.
    pub seeds: Vec<usize>,
    pub counts: Vec<u64>,
    pub walks: u64,
}

impl WalkStats {
    pub fn frequency(&self, seed: usize) -> Option<f64> {
        let j = self.seeds.binary_search(&seed).ok()?;
        Some(self.counts[j] as f64 / self.walks as f64)
    }
}

/// Walk `i` draws from ChaCha stream `i` of the generator keyed by
/// `rng_seed`, so the result does not depend on how walks are scheduled.
fn walk_rng(rng_seed: u64, walk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(walk);
    rng
}

/// Runs `walks` independent walks from transient node `start`.
///
/// Every walk moves to a uniformly random neighbour until it hits a seed.
/// A walk longer than `step_cap` steps means the chain is malformed and
/// aborts the run.
pub fn run_walks(
    chain: &AbsorbingChain<'_>,
    start: usize,
    walks: u64,
    rng_seed: u64,
    step_cap: u64,
) -> Result<WalkStats> {
    chain.graph().check_node(start)?;
    if chain.is_seed(start) {
        return Err(Error::NotTransient(start));
    }
    if walks == 0 {
        return Err(Error::InvalidParameter("walks must be at least 1".into()));
    }
    let graph = chain.graph();
    let sigma = chain.absorbing_count();

    let counts = (0..walks)
        .into_par_iter()
        .try_fold(
            || vec![0u64; sigma],
            |mut counts, w| {
                let mut rng = walk_rng(rng_seed, w);
                let mut at = start;
                let mut steps = 0u64;
                loop {
                    if let Some(j) = chain.absorbing_index(at) {
                        counts[j] += 1;
                        return Ok(counts);
                    }
                    if steps == step_cap {
                        return Err(Error::StepCapExceeded {
                            start,
                            cap: step_cap,
                        });
                    }
                    let nbrs = graph.neighbors(at);
                    at = nbrs[rng.random_range(0..nbrs.len())];
                    steps += 1;
                }
            },
        )
        .try_reduce(
            || vec![0u64; sigma],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;

    Ok(WalkStats {
        start,
        seeds: chain.seeds().to_vec(),
        counts,
        walks,
    })
}

/// Plug-in estimate `Σ_s β_i(s) · counts[s] / walks`.
///
/// Seeds missing from `seeds` contribute nothing.
pub fn estimate_affinity(stats: &WalkStats, seeds: &SeedSet, community: usize) -> f64 {
    let weighted: f64 = stats
        .seeds
        .iter()
        .zip(&stats.counts)
        .filter_map(|(&s, &c)| {
            let beta = seeds.affinities(s)?.get(community)?;
            Some(beta * c as f64)
        })
        .sum();
    weighted / stats.walks as f64
}

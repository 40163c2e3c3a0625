//! Detection quality on planted partitions, and the experiment harness.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::detect::{crisp_membership, detect_multi, DetectOptions, SeedSet};
use crate::error::{Error, Result};
use crate::graph::check_seed_reachability;
use crate::lfr::{generate, sample_seeds, LfrParams, PlantedGraph};

/// Fraction of nodes whose predicted community equals the true one.
pub fn quality(truth: &[usize], predicted: &[usize]) -> Result<f64> {
    if truth.len() != predicted.len() {
        return Err(Error::InvalidParameter(format!(
            "truth covers {} nodes, prediction {}",
            truth.len(),
            predicted.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::InvalidParameter("no nodes to score".into()));
    }
    let hits = truth.iter().zip(predicted).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Detects communities from `seeds` and scores the crisp assignment.
///
/// Nodes that cannot reach any seed get no prediction and count as
/// misassigned; detection runs on the remaining subgraph.
pub fn score_seeds(
    planted: &PlantedGraph,
    seeds: &SeedSet,
    options: &DetectOptions,
) -> Result<f64> {
    let graph = &planted.graph;
    let n = graph.node_count();
    let unreachable = check_seed_reachability(graph, &seeds.nodes())?;

    let predicted: Vec<Option<usize>> = if unreachable.is_empty() {
        let detection = detect_multi(graph, seeds, options)?;
        crisp_membership(n, &detection.affinities, seeds)
    } else {
        let mut keep = vec![true; n];
        for &v in &unreachable {
            keep[v] = false;
        }
        let (sub, old_ids) = graph.induced_subgraph(&keep);
        let mut new_id = vec![usize::MAX; n];
        for (i, &v) in old_ids.iter().enumerate() {
            new_id[v] = i;
        }
        let mut sub_seeds = SeedSet::new(seeds.communities())?;
        for (s, row) in seeds.iter() {
            sub_seeds.insert(new_id[s], row.to_vec())?;
        }
        let detection = detect_multi(&sub, &sub_seeds, options)?;
        let sub_pred = crisp_membership(sub.node_count(), &detection.affinities, &sub_seeds);
        let mut full = vec![None; n];
        for (i, p) in sub_pred.into_iter().enumerate() {
            full[old_ids[i]] = p;
        }
        full
    };

    let predicted: Vec<usize> = predicted
        .into_iter()
        .map(|p| p.unwrap_or(usize::MAX))
        .collect();
    quality(&planted.membership, &predicted)
}

/// One point of an experiment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    /// Generator parameters; `rng_seed` is ignored and derived per trial.
    pub params: LfrParams,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub cell: usize,
    pub trial: usize,
    pub params: LfrParams,
    pub sigma: f64,
    pub rng_seed: u64,
    pub q: f64,
    pub seconds: f64,
    pub unseeded_communities: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialFailure {
    pub cell: usize,
    pub trial: usize,
    pub rng_seed: u64,
    pub reason: String,
}

/// Aggregate over the completed trials of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub cell: SweepCell,
    pub completed: usize,
    pub failed: usize,
    pub q_mean: f64,
    pub q_std: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub seconds_mean: f64,
}

impl CellSummary {
    pub fn is_complete(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub trials: Vec<TrialResult>,
    pub failures: Vec<TrialFailure>,
    pub cells: Vec<CellSummary>,
}

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent seed from a base seed and a path of indices.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(base), |h, &p| mix(h ^ mix(p)))
}

/// Generates a graph, samples seeds, detects and scores, all driven by
/// `rng_seed`.
pub fn run_trial(cell: &SweepCell, rng_seed: u64, options: &DetectOptions) -> Result<(f64, usize)> {
    let params = cell.params.clone().with_seed(derive_seed(rng_seed, &[0]));
    let planted = generate(&params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rng_seed, &[1]));
    let sample = sample_seeds(&planted, cell.sigma, &mut rng)?;
    let q = score_seeds(&planted, &sample.seeds, options)?;
    Ok((q, sample.unseeded.len()))
}

/// Runs `trials` independent trials per grid cell in parallel.
///
/// Trial `t` of cell `c` uses the seed `derive_seed(rng_seed, [c, t])`, so
/// results do not depend on scheduling. Failed trials are recorded and
/// leave their cell incomplete.
pub fn run_sweep(
    grid: &[SweepCell],
    trials: usize,
    rng_seed: u64,
    options: &DetectOptions,
) -> Result<SweepOutcome> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty sweep grid".into()));
    }
    for cell in grid {
        cell.params.resolve()?;
        if !(cell.sigma > 0.0 && cell.sigma <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma = {} must lie in (0, 1]",
                cell.sigma
            )));
        }
    }

    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..trials).map(move |t| (c, t)))
        .collect();
    let outcomes: Vec<std::result::Result<TrialResult, TrialFailure>> = jobs
        .par_iter()
        .map(|&(c, t)| {
            let seed = derive_seed(rng_seed, &[c as u64, t as u64]);
            let started = Instant::now();
            match run_trial(&grid[c], seed, options) {
                Ok((q, unseeded)) => Ok(TrialResult {
                    cell: c,
                    trial: t,
                    params: grid[c].params.clone().with_seed(seed),
                    sigma: grid[c].sigma,
                    rng_seed: seed,
                    q,
                    seconds: started.elapsed().as_secs_f64(),
                    unseeded_communities: unseeded,
                }),
                Err(e) => Err(TrialFailure {
                    cell: c,
                    trial: t,
                    rng_seed: seed,
                    reason: e.to_string(),
                }),
            }
        })
        .collect();

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => results.push(r),
            Err(f) => failures.push(f),
        }
    }

    let cells = grid
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            let qs: Vec<f64> = results
                .iter()
                .filter(|r| r.cell == c)
                .map(|r| r.q)
                .collect();
            let secs: Vec<f64> = results
                .iter()
                .filter(|r| r.cell == c)
                .map(|r| r.seconds)
                .collect();
            let stats = Stats::of(&qs);
            CellSummary {
                cell: cell.clone(),
                completed: qs.len(),
                failed: failures.iter().filter(|f| f.cell == c).count(),
                q_mean: stats.mean,
                q_std: stats.std,
                q_min: stats.min,
                q_max: stats.max,
                seconds_mean: Stats::of(&secs).mean,
            }
        })
        .collect();

    Ok(SweepOutcome {
        trials: results,
        failures,
        cells,
    })
}

struct Stats {
    mean: f64,
    std: f64,
    min: f64,
    max: f64,
}

impl Stats {
    /// Mean, sample standard deviation, min and max; NaN when empty.
    fn of(xs: &[f64]) -> Stats {
        if xs.is_empty() {
            return Stats {
                mean: f64::NAN,
                std: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
            };
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Stats {
            mean,
            std,
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Quality of `runs` detections on one fixed graph, each with freshly
/// sampled seeds. Run `r` draws its seeds from `derive_seed(rng_seed, [r])`.
pub fn seed_resampling(
    planted: &PlantedGraph,
    sigma: f64,
    runs: usize,
    rng_seed: u64,
    options: &DetectOptions,
) -> Result<Vec<f64>> {
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be at least 1".into()));
    }
    (0..runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rng_seed, &[r as u64]));
            let sample = sample_seeds(planted, sigma, &mut rng)?;
            score_seeds(planted, &sample.seeds, options)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub freq: f64,
}

/// Relative frequencies over `bins` equal-width bins spanning `[0, 1]`.
/// The last bin is closed on the right.
pub fn histogram(values: &[f64], bins: usize) -> Result<Vec<Bin>> {
    if bins == 0 {
        return Err(Error::InvalidParameter("bins must be at least 1".into()));
    }
    if values.is_empty() {
        return Err(Error::InvalidParameter("no values to bin".into()));
    }
    let mut counts = vec![0usize; bins];
    for &v in values {
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("cannot bin {v}")));
        }
        let i = ((v * bins as f64).floor().max(0.0) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let total = values.len() as f64;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| Bin {
            lo: i as f64 / bins as f64,
            hi: (i + 1) as f64 / bins as f64,
            freq: c as f64 / total,
        })
        .collect())
}

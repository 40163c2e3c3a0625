//! LFR-style planted-partition benchmark graphs.
//!
//! The pipeline:
//!
//! 1. node degrees from a truncated power law with exponent `gamma`, with
//!    the lower bound calibrated so the mean matches `avg_k`;
//! 2. community sizes from a truncated power law with exponent `beta_exp`
//!    until they cover `n` nodes;
//! 3. each node keeps `⌈(1 - mu)·k⌉` of its `k` stubs inside its
//!    community, and is placed in a community large enough to host them;
//! 4. internal stubs are matched per community and external stubs across
//!    communities, configuration-model style, with collisions repaired by
//!    random edge swaps and the leftovers dropped.
//!
//! Generation is deterministic in [`LfrParams::rng_seed`].

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detect::SeedSet;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Generation attempts before giving up on a parameter set.
const MAX_ATTEMPTS: usize = 20;
/// Degree sequences drawn while calibrating the mean degree.
const DEGREE_DRAWS: usize = 200;
/// Community-size sequences drawn per attempt while looking for one that
/// can host the internal degrees.
const SIZE_DRAWS: usize = 1000;
/// Seed draws made to cover every community.
const SEED_RETRIES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct LfrParams {
    pub n: usize,
    pub avg_k: f64,
    pub gamma: f64,
    pub beta_exp: f64,
    pub mu: f64,
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    pub s_min: Option<usize>,
    pub s_max: Option<usize>,
    pub rng_seed: u64,
}

/// Degree and community-size bounds after defaults are filled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub k_min: usize,
    pub k_max: usize,
    pub s_min: usize,
    pub s_max: usize,
}

impl LfrParams {
    pub fn new(n: usize, avg_k: f64, gamma: f64, beta_exp: f64, mu: f64) -> Self {
        LfrParams {
            n,
            avg_k,
            gamma,
            beta_exp,
            mu,
            k_min: None,
            k_max: None,
            s_min: None,
            s_max: None,
            rng_seed: 0,
        }
    }

    pub fn with_seed(mut self, rng_seed: u64) -> Self {
        self.rng_seed = rng_seed;
        self
    }

    /// Validates the parameters and fills in default bounds.
    ///
    /// Defaults: `k_max = min(3⟨k⟩, n/10)` (at least `⌈⟨k⟩⌉`), `k_min` the
    /// value whose truncated power-law mean is closest to `⟨k⟩`,
    /// `s_min = max(10, k_min + 1)` and `s_max = max(n/5, k_max + 1)`, both
    /// capped at `n`.
    pub fn resolve(&self) -> Result<Bounds> {
        let infeasible = |msg: String| Err(Error::Infeasible(msg));
        let n = self.n;
        if n < 2 {
            return infeasible(format!("n = {n} is too small"));
        }
        if !(self.avg_k.is_finite() && self.avg_k >= 1.0 && self.avg_k < (n - 1) as f64) {
            return infeasible(format!("avg_k = {} must lie in [1, n - 1)", self.avg_k));
        }
        if !(self.gamma.is_finite() && self.gamma > 1.0) {
            return infeasible(format!("gamma = {} must exceed 1", self.gamma));
        }
        if !(self.beta_exp.is_finite() && self.beta_exp > 1.0) {
            return infeasible(format!("beta_exp = {} must exceed 1", self.beta_exp));
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return infeasible(format!("mu = {} must lie in [0, 1]", self.mu));
        }

        let k_max = match self.k_max {
            Some(k) => k,
            None => {
                let k = ((3.0 * self.avg_k).round() as usize).min(n / 10);
                k.max(self.avg_k.ceil() as usize).min(n - 1)
            }
        };
        if k_max == 0 || k_max >= n {
            return infeasible(format!("k_max = {k_max} must lie in [1, n) with n = {n}"));
        }
        let k_min = match self.k_min {
            Some(k) => k,
            None => calibrate_k_min(self.gamma, k_max, self.avg_k),
        };
        if k_min == 0 || k_min > k_max {
            return infeasible(format!("need 1 <= k_min <= k_max, got {k_min} and {k_max}"));
        }
        let mean = truncated_mean(self.gamma, k_min, k_max);
        if (mean - self.avg_k).abs() > 0.05 * self.avg_k {
            return infeasible(format!(
                "degrees in [{k_min}, {k_max}] with gamma = {} average {mean:.2}, \
                 not within 5% of avg_k = {}",
                self.gamma, self.avg_k
            ));
        }

        let s_min = self.s_min.unwrap_or((k_min + 1).max(10)).min(n);
        let s_max = self.s_max.unwrap_or((n / 5).max(k_max + 1)).min(n);
        if s_min == 0 || s_min > s_max || s_max > n {
            return infeasible(format!(
                "community sizes need 1 <= s_min <= s_max <= n, got {s_min}, {s_max}, n = {n}"
            ));
        }
        let top_internal = internal_degree(self.mu, k_max);
        if top_internal >= s_max {
            return infeasible(format!(
                "a node of degree {k_max} needs {top_internal} neighbours inside its \
                 community, but s_max = {s_max}"
            ));
        }
        Ok(Bounds {
            k_min,
            k_max,
            s_min,
            s_max,
        })
    }
}

/// `⌈(1 - μ) k⌉`, with a small guard so exact products do not round up.
fn internal_degree(mu: f64, k: usize) -> usize {
    (((1.0 - mu) * k as f64 - 1e-9).ceil().max(0.0) as usize).min(k)
}

/// Mean of the discrete power law `p(x) ∝ x^-exponent` on `[lo, hi]`.
pub fn truncated_mean(exponent: f64, lo: usize, hi: usize) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for x in lo..=hi {
        let w = (x as f64).powf(-exponent);
        num += x as f64 * w;
        den += w;
    }
    num / den
}

fn calibrate_k_min(gamma: f64, k_max: usize, avg_k: f64) -> usize {
    (1..=k_max)
        .min_by(|&a, &b| {
            let da = (truncated_mean(gamma, a, k_max) - avg_k).abs();
            let db = (truncated_mean(gamma, b, k_max) - avg_k).abs();
            da.total_cmp(&db)
        })
        .unwrap_or(1)
}

/// Discrete power law on `[lo, hi]`, sampled by inverse CDF.
#[derive(Debug, Clone)]
struct PowerLaw {
    lo: usize,
    index: WeightedIndex<f64>,
}

impl PowerLaw {
    fn new(exponent: f64, lo: usize, hi: usize) -> Result<Self> {
        if !(exponent.is_finite() && exponent > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "power-law exponent must exceed 1, got {exponent}"
            )));
        }
        if lo == 0 || lo > hi {
            return Err(Error::InvalidParameter(format!(
                "empty power-law support [{lo}, {hi}]"
            )));
        }
        let weights = (lo..=hi).map(|x| (x as f64).powf(-exponent));
        let index = WeightedIndex::new(weights)
            .map_err(|e| Error::InvalidParameter(format!("power-law weights: {e}")))?;
        Ok(PowerLaw { lo, index })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.lo + self.index.sample(rng)
    }
}

/// `count` i.i.d. draws from `p(x) ∝ x^-exponent` truncated to `[lo, hi]`.
pub fn sample_power_law<R: Rng + ?Sized>(
    exponent: f64,
    lo: usize,
    hi: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let law = PowerLaw::new(exponent, lo, hi)?;
    Ok((0..count).map(|_| law.sample(rng)).collect())
}

/// A generated graph with its planted partition.
#[derive(Debug, Clone)]
pub struct PlantedGraph {
    pub graph: Graph,
    /// Ground-truth community of every node.
    pub membership: Vec<usize>,
    /// Size of every community.
    pub sizes: Vec<usize>,
    pub report: GenerationReport,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GenerationReport {
    pub bounds: Option<Bounds>,
    pub attempts: usize,
    /// Edges implied by the degree sequence.
    pub target_edges: usize,
    /// Stub pairs that could not be placed without a collision.
    pub dropped_edges: usize,
    /// Unpaired stubs discarded for parity.
    pub dropped_stubs: usize,
    pub swaps: usize,
}

impl PlantedGraph {
    /// Wraps an existing graph and ground truth, e.g. read from disk.
    pub fn from_parts(graph: Graph, membership: Vec<usize>) -> Result<Self> {
        if membership.len() != graph.node_count() {
            return Err(Error::InvalidParameter(format!(
                "membership covers {} nodes, graph has {}",
                membership.len(),
                graph.node_count()
            )));
        }
        let l = membership.iter().max().map_or(0, |&c| c + 1);
        let mut sizes = vec![0; l];
        for &c in &membership {
            sizes[c] += 1;
        }
        Ok(PlantedGraph {
            graph,
            membership,
            sizes,
            report: GenerationReport::default(),
        })
    }

    pub fn communities(&self) -> usize {
        self.sizes.len()
    }

    /// Fraction of edges whose endpoints lie in different communities.
    pub fn mixing_fraction(&self) -> f64 {
        let m = self.graph.edge_count();
        if m == 0 {
            return 0.0;
        }
        let inter = self
            .graph
            .edges()
            .filter(|&(u, v)| self.membership[u] != self.membership[v])
            .count();
        inter as f64 / m as f64
    }
}

/// Generates a planted-partition graph.
///
/// Fails with [`Error::Infeasible`] when the parameters violate their
/// invariants or no attempt produces a valid graph.
pub fn generate(params: &LfrParams) -> Result<PlantedGraph> {
    let bounds = params.resolve()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut last_failure = String::new();

    for attempt in 1..=MAX_ATTEMPTS {
        let degrees = sample_degrees(params, &bounds, &mut rng)?;
        let mut internal: Vec<usize> = degrees
            .iter()
            .map(|&k| internal_degree(params.mu, k))
            .collect();

        let sizes = match draw_hostable_sizes(params, &bounds, &internal, &mut rng)? {
            Ok(sizes) => sizes,
            Err(msg) => {
                last_failure = msg;
                continue;
            }
        };
        let membership = match assign_communities(&internal, &sizes, &mut rng) {
            Ok(m) => m,
            Err(msg) => {
                last_failure = msg;
                continue;
            }
        };

        let target_edges = degrees.iter().sum::<usize>() / 2;
        let mut wiring = Wiring::new(100 * target_edges as u64);
        let mut members = vec![Vec::new(); sizes.len()];
        for (v, &c) in membership.iter().enumerate() {
            members[c].push(v);
        }

        let mut edges = Vec::with_capacity(target_edges);
        for (c, group) in members.iter().enumerate() {
            fix_internal_parity(group, &degrees, &mut internal, sizes[c]);
            let stubs: Vec<usize> = group
                .iter()
                .flat_map(|&v| std::iter::repeat_n(v, internal[v]))
                .collect();
            edges.extend(wiring.wire(stubs, |_, _| true, &mut rng));
        }
        let external: Vec<usize> = (0..params.n)
            .flat_map(|v| std::iter::repeat_n(v, degrees[v] - internal[v]))
            .collect();
        edges.extend(wiring.wire(external, |a, b| membership[a] != membership[b], &mut rng));

        let lost = wiring.dropped_edges as f64 + wiring.dropped_stubs as f64 / 2.0;
        if lost > 0.01 * target_edges as f64 {
            last_failure = format!(
                "{} edges and {} stubs dropped, above 1% of {target_edges} edges",
                wiring.dropped_edges, wiring.dropped_stubs
            );
            continue;
        }

        let graph = Graph::from_edges(params.n, &edges)?;
        debug_assert_eq!(graph.edge_count(), edges.len());
        return Ok(PlantedGraph {
            graph,
            membership,
            sizes,
            report: GenerationReport {
                bounds: Some(bounds),
                attempts: attempt,
                target_edges,
                dropped_edges: wiring.dropped_edges,
                dropped_stubs: wiring.dropped_stubs,
                swaps: wiring.swaps,
            },
        });
    }

    Err(Error::Infeasible(format!(
        "no valid graph after {MAX_ATTEMPTS} attempts; last failure: {last_failure}"
    )))
}

fn sample_degrees(params: &LfrParams, b: &Bounds, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    let law = PowerLaw::new(params.gamma, b.k_min, b.k_max)?;
    let target = params.avg_k;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..DEGREE_DRAWS {
        let degrees: Vec<usize> = (0..params.n).map(|_| law.sample(rng)).collect();
        let mean = degrees.iter().sum::<usize>() as f64 / params.n as f64;
        let gap = (mean - target).abs();
        if best.as_ref().is_none_or(|(g, _)| gap < *g) {
            best = Some((gap, degrees));
        }
        if gap <= 0.01 * target {
            break;
        }
    }
    let (gap, mut degrees) = best.expect("at least one draw");
    if gap > 0.05 * target {
        return Err(Error::Infeasible(format!(
            "sampled mean degree misses avg_k = {target} by {gap:.2} (more than 5%)"
        )));
    }
    if degrees.iter().sum::<usize>() % 2 == 1 {
        let up: Vec<usize> = (0..params.n).filter(|&v| degrees[v] < b.k_max).collect();
        if let Some(&v) = up.choose(rng) {
            degrees[v] += 1;
        } else {
            let v = rng.random_range(0..params.n);
            degrees[v] -= 1;
        }
    }
    Ok(degrees)
}

fn sample_sizes(
    params: &LfrParams,
    b: &Bounds,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Vec<usize>>> {
    let law = PowerLaw::new(params.beta_exp, b.s_min, b.s_max)?;
    let n = params.n;
    let mut sizes = Vec::new();
    let mut total = 0;
    while total < n {
        let s = law.sample(rng);
        sizes.push(s);
        total += s;
    }
    let excess = total - n;
    let last = sizes.last_mut().expect("n >= 1");
    if *last >= excess + b.s_min {
        *last -= excess;
        return Ok(Some(sizes));
    }
    // The last draw cannot absorb the excess: drop it and grow the others.
    let removed = sizes.pop().expect("non-empty");
    let mut deficit = n - (total - removed);
    while deficit > 0 {
        let open: Vec<usize> = (0..sizes.len()).filter(|&c| sizes[c] < b.s_max).collect();
        let Some(&c) = open.choose(rng) else {
            return Ok(None);
        };
        sizes[c] += 1;
        deficit -= 1;
    }
    Ok(Some(sizes))
}

/// Draws size sequences until one can host every internal degree: for each
/// `d`, communities larger than `d` must offer at least as many slots as
/// there are nodes with internal degree `d` or more.
fn draw_hostable_sizes(
    params: &LfrParams,
    b: &Bounds,
    internal: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<std::result::Result<Vec<usize>, String>> {
    let mut by_degree = internal.to_vec();
    by_degree.sort_unstable_by(|a, c| c.cmp(a));
    let mut failure = "community sizes could not be made to sum to n".to_string();
    for _ in 0..SIZE_DRAWS {
        let Some(sizes) = sample_sizes(params, b, rng)? else {
            continue;
        };
        let mut sorted = sizes.clone();
        sorted.sort_unstable_by(|a, c| c.cmp(a));
        // Slots in communities larger than d, for the i-th largest degree.
        let mut slots = 0;
        let mut next = 0;
        let hostable = by_degree.iter().enumerate().all(|(i, &d)| {
            while next < sorted.len() && sorted[next] > d {
                slots += sorted[next];
                next += 1;
            }
            slots > i
        });
        if hostable {
            return Ok(Ok(sizes));
        }
        failure = format!(
            "no size sequence in {SIZE_DRAWS} draws can host internal degrees up to {} \
             (largest community drawn: {})",
            by_degree[0], sorted[0]
        );
    }
    Ok(Err(failure))
}

/// Places nodes, largest internal degree first, into communities with room
/// for their internal stubs, choosing among eligible communities in
/// proportion to their free slots.
fn assign_communities(
    internal: &[usize],
    sizes: &[usize],
    rng: &mut ChaCha8Rng,
) -> std::result::Result<Vec<usize>, String> {
    let mut order: Vec<usize> = (0..internal.len()).collect();
    order.shuffle(rng);
    order.sort_by(|&a, &b| internal[b].cmp(&internal[a]));

    let mut free = sizes.to_vec();
    let mut membership = vec![usize::MAX; internal.len()];
    for v in order {
        let d = internal[v];
        let room: usize = (0..sizes.len())
            .filter(|&c| sizes[c] > d)
            .map(|c| free[c])
            .sum();
        if room == 0 {
            return Err(format!(
                "no community can host a node with internal degree {d} (largest community has {} nodes)",
                sizes.iter().max().copied().unwrap_or(0)
            ));
        }
        let mut pick = rng.random_range(0..room);
        let c = (0..sizes.len())
            .filter(|&c| sizes[c] > d)
            .find(|&c| {
                if pick < free[c] {
                    true
                } else {
                    pick -= free[c];
                    false
                }
            })
            .expect("pick within room");
        membership[v] = c;
        free[c] -= 1;
    }
    Ok(membership)
}

/// Makes the internal stub count of a community even by moving one
/// external stub inside. If no member can take one, the odd stub is left
/// for the matcher to drop.
fn fix_internal_parity(group: &[usize], degrees: &[usize], internal: &mut [usize], size: usize) {
    let total: usize = group.iter().map(|&v| internal[v]).sum();
    if total % 2 == 0 {
        return;
    }
    if let Some(&v) = group
        .iter()
        .find(|&&v| internal[v] < degrees[v] && internal[v] + 1 < size)
    {
        internal[v] += 1;
    }
}

/// Swap attempts spent on one colliding pair before it is dropped.
const PAIR_TRIES: u64 = 1000;

struct Wiring {
    present: HashSet<(usize, usize)>,
    budget: u64,
    dropped_edges: usize,
    dropped_stubs: usize,
    swaps: usize,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Wiring {
    fn new(budget: u64) -> Self {
        Wiring {
            present: HashSet::new(),
            budget,
            dropped_edges: 0,
            dropped_stubs: 0,
            swaps: 0,
        }
    }

    /// Randomly pairs `stubs` into edges accepted by `allowed`, repairing
    /// self-loops, duplicates and disallowed pairs by swapping endpoints
    /// with already placed edges of the same pool.
    fn wire<F>(
        &mut self,
        mut stubs: Vec<usize>,
        allowed: F,
        rng: &mut ChaCha8Rng,
    ) -> Vec<(usize, usize)>
    where
        F: Fn(usize, usize) -> bool,
    {
        stubs.shuffle(rng);
        if stubs.len() % 2 == 1 {
            stubs.pop();
            self.dropped_stubs += 1;
        }
        let mut placed = Vec::with_capacity(stubs.len() / 2);
        let mut bad = Vec::new();
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if a != b && allowed(a, b) && self.present.insert(key(a, b)) {
                placed.push((a, b));
            } else {
                bad.push((a, b));
            }
        }

        for (a, b) in bad {
            let mut resolved = false;
            // A pair that cannot be repaired must not exhaust the budget
            // shared with the remaining ones.
            let mut tries = PAIR_TRIES.max(2 * placed.len() as u64);
            while self.budget > 0 && tries > 0 && !placed.is_empty() {
                self.budget -= 1;
                tries -= 1;
                let j = rng.random_range(0..placed.len());
                let (mut c, mut d) = placed[j];
                if rng.random_bool(0.5) {
                    std::mem::swap(&mut c, &mut d);
                }
                // Replace (a, b) + (c, d) with (a, c) + (b, d).
                if a == c || b == d || !allowed(a, c) || !allowed(b, d) {
                    continue;
                }
                let (k1, k2) = (key(a, c), key(b, d));
                if k1 == k2 || self.present.contains(&k1) || self.present.contains(&k2) {
                    continue;
                }
                self.present.remove(&key(c, d));
                self.present.insert(k1);
                self.present.insert(k2);
                placed[j] = (a, c);
                placed.push((b, d));
                self.swaps += 1;
                resolved = true;
                break;
            }
            if !resolved {
                self.dropped_edges += 1;
            }
        }
        placed
    }
}

/// Seeds drawn for one benchmark run.
#[derive(Debug, Clone)]
pub struct SeedSample {
    pub seeds: SeedSet,
    /// Communities that received no seed.
    pub unseeded: Vec<usize>,
    pub draws: usize,
}

/// Draws `round(sigma·n)` seeds uniformly at random, with 0/1 indicator
/// affinities for their planted community.
///
/// Redraws up to a bounded number of times until every community holds a
/// seed; communities still uncovered after that are reported in
/// [`SeedSample::unseeded`].
pub fn sample_seeds<R: Rng + ?Sized>(
    planted: &PlantedGraph,
    sigma: f64,
    rng: &mut R,
) -> Result<SeedSample> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma = {sigma} must lie in (0, 1]"
        )));
    }
    let n = planted.graph.node_count();
    let count = (sigma * n as f64).round() as usize;
    if count == 0 {
        return Err(Error::InvalidParameter(format!(
            "sigma = {sigma} selects no seeds among {n} nodes"
        )));
    }
    let l = planted.communities();

    let mut draws = 0;
    loop {
        draws += 1;
        let mut chosen = rand::seq::index::sample(rng, n, count).into_vec();
        chosen.sort_unstable();
        let mut covered = vec![false; l];
        for &s in &chosen {
            covered[planted.membership[s]] = true;
        }
        let unseeded: Vec<usize> = (0..l).filter(|&c| !covered[c]).collect();
        if unseeded.is_empty() || draws > SEED_RETRIES {
            let seeds = SeedSet::indicators(chosen.iter().map(|&s| (s, planted.membership[s])), l)?;
            return Ok(SeedSample {
                seeds,
                unseeded,
                draws,
            });
        }
    }
}

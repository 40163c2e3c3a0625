//! Single- and multi-community detection.
//!
//! Each community is one right-hand side of the same absorbing system, so
//! the matrix (and its factorisation or preconditioner) is shared and the
//! per-community solves run in parallel.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::markov::AbsorbingChain;
use crate::solver::{
    default_max_iter, AbsorbingSystem, CgSolver, DirectSolver, SolveReport, DEFAULT_DENSE_CAP,
    DEFAULT_TOLERANCE,
};

/// Seed nodes and their affinity vectors `β(s) ∈ [0, 1]^l`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSet {
    entries: BTreeMap<usize, Vec<f64>>,
    communities: usize,
}

impl SeedSet {
    pub fn new(communities: usize) -> Result<Self> {
        if communities == 0 {
            return Err(Error::InvalidParameter(
                "a seed set needs at least one community".into(),
            ));
        }
        Ok(SeedSet {
            entries: BTreeMap::new(),
            communities,
        })
    }

    /// Seeds with 0/1 indicator rows: `β_i(s) = 1` iff `s` belongs to `i`.
    pub fn indicators<I>(members: I, communities: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = SeedSet::new(communities)?;
        for (node, community) in members {
            set.set(node, community, 1.0)?;
        }
        Ok(set)
    }

    /// Adds or replaces the affinity row of `node`.
    pub fn insert(&mut self, node: usize, affinities: Vec<f64>) -> Result<()> {
        if affinities.len() != self.communities {
            return Err(Error::CommunityMismatch {
                expected: self.communities,
                found: affinities.len(),
            });
        }
        for (community, &value) in affinities.iter().enumerate() {
            check_affinity(node, community, value)?;
        }
        self.entries.insert(node, affinities);
        Ok(())
    }

    /// Sets a single entry, creating an all-zero row for a new seed.
    pub fn set(&mut self, node: usize, community: usize, value: f64) -> Result<()> {
        if community >= self.communities {
            return Err(Error::CommunityOutOfRange {
                community,
                communities: self.communities,
            });
        }
        check_affinity(node, community, value)?;
        let row = self
            .entries
            .entry(node)
            .or_insert_with(|| vec![0.0; self.communities]);
        row[community] = value;
        Ok(())
    }

    pub fn communities(&self) -> usize {
        self.communities
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.entries.contains_key(&node)
    }

    pub fn affinities(&self, node: usize) -> Option<&[f64]> {
        self.entries.get(&node).map(Vec::as_slice)
    }

    /// Seed ids in ascending order.
    pub fn nodes(&self) -> Vec<usize> {
        self.entries.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.entries.iter().map(|(&n, row)| (n, row.as_slice()))
    }

    /// Applies `f` to every affinity row, revalidating the result.
    pub fn map_rows<F>(&self, mut f: F) -> Result<SeedSet>
    where
        F: FnMut(usize, &[f64]) -> Vec<f64>,
    {
        let mut out = SeedSet::new(self.communities)?;
        for (node, row) in self.iter() {
            out.insert(node, f(node, row))?;
        }
        Ok(out)
    }
}

fn check_affinity(node: usize, community: usize, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidAffinity {
            node,
            community,
            value,
        })
    }
}

/// Affinity vectors of the non-seed nodes, one row per node in ascending id
/// order. Values are stored as solved; use [`AffinityMatrix::clamped`] at
/// output boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    nodes: Vec<usize>,
    values: Vec<f64>,
    communities: usize,
}

impl AffinityMatrix {
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn communities(&self) -> usize {
        self.communities
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.communities..(i + 1) * self.communities]
    }

    /// Row of node `v`, if `v` is a non-seed node.
    pub fn row_of(&self, v: usize) -> Option<&[f64]> {
        self.nodes.binary_search(&v).ok().map(|i| self.row(i))
    }

    pub fn rows(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.nodes
            .iter()
            .copied()
            .zip(self.values.chunks(self.communities.max(1)))
    }

    pub fn column(&self, community: usize) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.values[i * self.communities + community])
            .collect()
    }

    /// Row `i` clamped into `[0, 1]`.
    pub fn clamped(&self, i: usize) -> Vec<f64> {
        self.row(i).iter().map(|v| v.clamp(0.0, 1.0)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMode {
    /// Dense factorisation up to the dense cap, CG beyond it.
    #[default]
    Auto,
    Direct,
    Iterative,
}

impl FromStr for SolverMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(SolverMode::Auto),
            "direct" => Ok(SolverMode::Direct),
            "iterative" | "cg" => Ok(SolverMode::Iterative),
            other => Err(Error::InvalidParameter(format!(
                "unknown solver mode `{other}` (expected auto, direct or iterative)"
            ))),
        }
    }
}

impl fmt::Display for SolverMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverMode::Auto => "auto",
            SolverMode::Direct => "direct",
            SolverMode::Iterative => "iterative",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectOptions {
    pub mode: SolverMode,
    /// Relative-residual tolerance of the iterative solver.
    pub tolerance: f64,
    /// Iteration budget; `None` means `10·τ + 100`.
    pub max_iter: Option<usize>,
    pub dense_cap: usize,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions {
            mode: SolverMode::Auto,
            tolerance: DEFAULT_TOLERANCE,
            max_iter: None,
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }
}

impl DetectOptions {
    pub fn with_mode(mode: SolverMode) -> Self {
        DetectOptions {
            mode,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub affinities: AffinityMatrix,
    /// One report per community. Dense solves report zero iterations.
    pub reports: Vec<SolveReport>,
}

/// Detection for a seed set with a single community.
pub fn detect_single(graph: &Graph, seeds: &SeedSet, options: &DetectOptions) -> Result<Detection> {
    if seeds.communities() != 1 {
        return Err(Error::CommunityMismatch {
            expected: 1,
            found: seeds.communities(),
        });
    }
    detect_multi(graph, seeds, options)
}

/// Affinities of every non-seed node to each of the `l` communities.
///
/// Fails with [`Error::Unreachable`] if some node has no path to a seed,
/// and with [`Error::NotConverged`] if the iterative solver runs out of
/// iterations.
pub fn detect_multi(graph: &Graph, seeds: &SeedSet, options: &DetectOptions) -> Result<Detection> {
    if seeds.is_empty() {
        return Err(Error::EmptySeedSet);
    }
    for node in seeds.nodes() {
        graph.check_node(node)?;
    }
    if options.tolerance.is_nan() || options.tolerance <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {}",
            options.tolerance
        )));
    }

    let chain = AbsorbingChain::new(graph, &seeds.nodes())?;
    let system = AbsorbingSystem::assemble(&chain, seeds)?;
    let tau = system.dim();
    let l = seeds.communities();

    let use_direct = match options.mode {
        SolverMode::Direct => true,
        SolverMode::Iterative => false,
        SolverMode::Auto => tau <= options.dense_cap,
    };

    let columns: Vec<(Vec<f64>, SolveReport)> = if use_direct {
        let solver = DirectSolver::new(&system, options.dense_cap)?;
        (0..l)
            .into_par_iter()
            .map(|c| {
                let rhs = system.rhs(c)?;
                let x = solver.solve(rhs)?;
                let residual = system.residual_norm(&x, rhs);
                let b = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
                let report = SolveReport {
                    iterations: 0,
                    relative_residual: if b > 0.0 { residual / b } else { 0.0 },
                    converged: true,
                };
                Ok((x, report))
            })
            .collect::<Result<_>>()?
    } else {
        let solver = CgSolver::new(&system);
        let max_iter = options.max_iter.unwrap_or_else(|| default_max_iter(tau));
        (0..l)
            .into_par_iter()
            .map(|c| {
                let (x, report) = solver.solve(system.rhs(c)?, options.tolerance, max_iter);
                if !report.converged {
                    return Err(Error::NotConverged {
                        community: c,
                        iterations: report.iterations,
                        residual: report.relative_residual,
                    });
                }
                Ok((x, report))
            })
            .collect::<Result<_>>()?
    };

    let mut values = vec![0.0; tau * l];
    let mut reports = Vec::with_capacity(l);
    for (c, (x, report)) in columns.into_iter().enumerate() {
        for (i, v) in x.into_iter().enumerate() {
            values[i * l + c] = v;
        }
        reports.push(report);
    }

    Ok(Detection {
        affinities: AffinityMatrix {
            nodes: chain.transient_nodes().to_vec(),
            values,
            communities: l,
        },
        reports,
    })
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Crisp community of every non-seed node.
pub fn assign_crisp(affinities: &AffinityMatrix) -> BTreeMap<usize, usize> {
    affinities
        .rows()
        .map(|(node, row)| (node, argmax(row)))
        .collect()
}

/// Crisp community of every node in `0..n`: seeds by their given affinity
/// vector, everything else by its detected one.
///
/// Nodes covered by neither get `None`.
pub fn crisp_membership(
    n: usize,
    affinities: &AffinityMatrix,
    seeds: &SeedSet,
) -> Vec<Option<usize>> {
    let mut out = vec![None; n];
    for (node, row) in seeds.iter() {
        out[node] = Some(argmax(row));
    }
    for (node, row) in affinities.rows() {
        out[node] = Some(argmax(row));
    }
    out
}

//! Seed-driven fuzzy community detection.
//!
//! Seed nodes carry known community affinities and act as absorbing states
//! of a random walk. Every other node receives, per community, the expected
//! affinity of the seed at which a walk started from it is absorbed. These
//! values are obtained from one sparse symmetric diagonally dominant solve
//! per community on the subgraph induced by the non-seed nodes.
//!
//! The crate also ships an LFR-style planted-partition generator and the
//! evaluation harness used to measure detection quality against it.

pub mod detect;
pub mod error;
pub mod eval;
pub mod formats;
pub mod graph;
pub mod lfr;
pub mod markov;
pub mod solver;
pub mod walker;

pub use detect::{
    assign_crisp, crisp_membership, detect_multi, detect_single, AffinityMatrix, DetectOptions,
    Detection, SeedSet, SolverMode,
};
pub use error::{Error, Result};
pub use eval::{
    histogram, quality, run_sweep, Bin, CellSummary, SweepCell, SweepOutcome, TrialResult,
};
pub use graph::{check_seed_reachability, load_edge_list, Graph, LoadReport};
pub use lfr::{generate, sample_power_law, sample_seeds, LfrParams, PlantedGraph, SeedSample};
pub use markov::AbsorbingChain;
pub use solver::{AbsorbingSystem, CgSolver, DirectSolver, SolveReport};
pub use walker::{estimate_affinity, run_walks, WalkStats};

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use seedwalk::SolverMode;

const EXIT_CODES: &str = "\
Exit codes:
  0   success
  1   input could not be read or parsed, or another runtime failure
  2   some node cannot reach any seed (nodes listed on stderr)
  3   the iterative solver did not converge
  4   generator parameters are infeasible
  5   verify: a walker estimate is farther from the solver than allowed
  64  usage error";

const FORMATS: &str = "\
Input formats (lines starting with '#' and blank lines are ignored):
  edge list     one undirected edge per line, two whitespace-separated
                node labels; labels are arbitrary tokens, duplicates are
                merged, self-loops are rejected
                  a b
                  b c
  seed file     `node community affinity` per line; communities are
                numbered from 0, affinities lie in [0, 1], and entries a
                seed does not list are 0
                  a 0 1
                  c 1 0.5
  ground truth  `node community` per line, covering every node
                  a 0
                  b 1";

#[derive(Debug, Parser)]
#[command(
    name = "seedwalk",
    version,
    about = "Seed-driven fuzzy community detection by absorbing random walks",
    after_long_help = format!("{FORMATS}\n\n{EXIT_CODES}")
)]
pub struct Cli {
    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an LFR-style graph with a planted partition.
    #[command(after_long_help = GENERATE_HELP)]
    Generate(GenerateArgs),
    /// Compute community affinities of every node from a seed set.
    #[command(after_long_help = DETECT_HELP)]
    Detect(DetectArgs),
    /// Compare solver affinities of one node against simulated walks.
    #[command(after_long_help = VERIFY_HELP)]
    Verify(VerifyArgs),
    /// Measure detection quality over a grid of benchmark parameters.
    #[command(after_long_help = SWEEP_HELP)]
    Sweep(SweepArgs),
    /// Distribution of detection quality over resampled seed sets on one graph.
    #[command(after_long_help = HISTOGRAM_HELP)]
    Histogram(HistogramArgs),
}

const GENERATE_HELP: &str = "\
Writes to --out:
  graph.txt      edge list, nodes labelled 0..N-1
  truth.txt      ground truth, `node community`
  manifest.json  the invocation and its outputs

Example:
  seedwalk generate --n 500 --avg-k 20 --gamma 2 --beta-exp 2 --mu 0.05 \\
      --rng-seed 7 --out g500";

const DETECT_HELP: &str = "\
Writes to --out:
  affinities.csv  `node,c0,c1,...`, one row per node in input order; seeds
                  keep their given affinities, other values are clamped
                  to [0, 1] and printed with 9 significant digits
                    node,c0,c1
                    s1,1,0
                    v,0.333333333,0.666666667
  crisp.csv       `node,community`, the community of largest affinity
                  (lowest index on ties)
  manifest.json

Example:
  seedwalk detect --graph g500/graph.txt --seeds seeds.txt --out result";

const VERIFY_HELP: &str = "\
Prints, per community, the solver affinity, the walker estimate and their
gap. Succeeds when every gap is at most 4*sqrt(0.25/walks) + 1e-6, four
standard deviations of the worst-case estimator. Below 16 walks the bound
exceeds 1, so the check cannot fail and says little.

Example:
  seedwalk verify --graph fig.txt --seeds fig-seeds.txt --node v \\
      --walks 1000000 --rng-seed 1";

const SWEEP_HELP: &str = "\
Runs --trials independent trials for every combination of --mu and --sigma.
Each trial generates a graph, samples round(sigma*N) seeds with indicator
affinities, detects, and scores the fraction of correctly assigned nodes.

Writes to --out:
  results.csv    N,avg_k,gamma,beta_exp,mu,sigma,trials,q_mean,q_std,q_min,q_max,seconds_mean
                 one row per cell; `trials` counts completed trials and
                 seconds_mean is left empty unless --timing is given
  trials.csv     mu,sigma,trial,rng_seed,q,unseeded_communities
  failures.csv   mu,sigma,trial,rng_seed,reason (only if a trial failed)
  manifest.json

Example:
  seedwalk sweep --n 500 --avg-k 20 --gamma 2 --beta-exp 2 \\
      --mu 0,0.1,0.2,0.3 --sigma 0.05,0.2 --trials 100 --rng-seed 1 --out sweep";

const HISTOGRAM_HELP: &str = "\
Detects --runs times on the same graph, each time with a fresh uniform seed
sample of size round(sigma*N), and bins the resulting qualities.

Writes to --out:
  histogram.csv  bin_lo,bin_hi,freq with equal-width bins over [0, 1]; the
                 last bin includes 1
  qualities.csv  run,q
  manifest.json

Example:
  seedwalk histogram --graph g500/graph.txt --truth g500/truth.txt \\
      --sigma 0.1 --runs 1000 --rng-seed 3 --out hist";

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    /// auto (dense up to the dense cap, CG beyond), direct or iterative.
    #[arg(long, default_value = "auto")]
    #[serde(serialize_with = "display")]
    pub solver: SolverMode,
    /// Relative residual tolerance of the iterative solver.
    #[arg(long, default_value_t = seedwalk::solver::DEFAULT_TOLERANCE)]
    pub tol: f64,
    /// Iteration cap of the iterative solver (default: 10 * dim + 100).
    #[arg(long)]
    pub max_iter: Option<usize>,
}

fn display<S: serde::Serializer>(v: &SolverMode, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Number of nodes N.
    #[arg(long)]
    pub n: usize,
    /// Average degree.
    #[arg(long)]
    pub avg_k: f64,
    /// Degree power-law exponent.
    #[arg(long, default_value_t = 2.0)]
    pub gamma: f64,
    /// Community-size power-law exponent.
    #[arg(long, default_value_t = 2.0)]
    pub beta_exp: f64,
    /// Smallest degree (default: chosen to match --avg-k).
    #[arg(long)]
    pub k_min: Option<usize>,
    /// Largest degree (default: min(3 * avg_k, N / 10)).
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Smallest community (default: max(10, k_min + 1)).
    #[arg(long)]
    pub s_min: Option<usize>,
    /// Largest community (default: max(N / 5, k_max + 1)).
    #[arg(long)]
    pub s_max: Option<usize>,
}

impl ModelArgs {
    pub fn params(&self, mu: f64) -> seedwalk::LfrParams {
        let mut p = seedwalk::LfrParams::new(self.n, self.avg_k, self.gamma, self.beta_exp, mu);
        p.k_min = self.k_min;
        p.k_max = self.k_max;
        p.s_min = self.s_min;
        p.s_max = self.s_max;
        p
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Mixing parameter: fraction of each node's edges leaving its community.
    #[arg(long)]
    pub mu: f64,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DetectArgs {
    /// Edge list.
    #[arg(long)]
    pub graph: PathBuf,
    /// Seed file.
    #[arg(long)]
    pub seeds: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub seeds: PathBuf,
    /// Label of the non-seed node to check.
    #[arg(long)]
    pub node: String,
    #[arg(long, default_value_t = 100_000)]
    pub walks: u64,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    /// Abort a walk after this many steps.
    #[arg(long, default_value_t = seedwalk::walker::DEFAULT_STEP_CAP)]
    pub step_cap: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated mixing parameters.
    #[arg(long, value_delimiter = ',', required = true)]
    pub mu: Vec<f64>,
    /// Comma-separated seed fractions.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sigma: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    /// Record mean wall time per trial (makes results.csv non-reproducible).
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HistogramArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Ground-truth communities of the graph.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

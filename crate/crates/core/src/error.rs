use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("self-loop on node `{label}`{}", line_suffix(*.line))]
    SelfLoop { label: String, line: Option<usize> },

    #[error("input contains no edges")]
    EmptyInput,

    #[error("node id {id} out of range for graph with {n} nodes")]
    NodeOutOfRange { id: usize, n: usize },

    #[error("seed set is empty")]
    EmptySeedSet,

    #[error("{} node(s) cannot reach any seed", .nodes.len())]
    Unreachable { nodes: Vec<usize> },

    #[error("node {0} is a seed and has no transient transition row")]
    NotTransient(usize),

    #[error("affinity {value} of node {node} for community {community} is outside [0, 1]")]
    InvalidAffinity {
        node: usize,
        community: usize,
        value: f64,
    },

    #[error("expected {expected} communities, found {found}")]
    CommunityMismatch { expected: usize, found: usize },

    #[error("community index {community} out of range ({communities} communities)")]
    CommunityOutOfRange {
        community: usize,
        communities: usize,
    },

    #[error("seed affinities do not match the absorbing states of the chain")]
    SeedMismatch,

    #[error("system dimension {dim} exceeds the dense solver cap of {cap}")]
    DenseCapExceeded { dim: usize, cap: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(
        "solver did not converge for community {community}: \
         relative residual {residual:e} after {iterations} iterations"
    )]
    NotConverged {
        community: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("walk from node {start} exceeded the step cap of {cap}")]
    StepCapExceeded { start: usize, cap: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn line_suffix(line: Option<usize>) -> String {
    match line {
        Some(l) => format!(" at line {l}"),
        None => String::new(),
    }
}

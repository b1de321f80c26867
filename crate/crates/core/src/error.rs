use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors for malformed inputs and violated preconditions.
///
/// Algorithmic failures that are expected at finite `n` (a greedy embedding
/// that runs out of budget, a Hall violation) are reported through the
/// dedicated failure types of each module, not through this enum.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("vertex count mismatch: {left} vs {right}")]
    VertexCountMismatch { left: usize, right: usize },
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("vertex sets must be disjoint and nonempty")]
    InvalidVertexSets,
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("infeasible tree shape: {0}")]
    InfeasibleShape(String),
    #[error("cannot remove {requested} leaves from a tree with {available}")]
    TooManyLeaves { requested: usize, available: usize },
    #[error("minimum degree {min_degree} is below {alpha} * {n}")]
    MinDegreeTooSmall { min_degree: usize, alpha: f64, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

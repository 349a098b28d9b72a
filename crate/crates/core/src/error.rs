use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid id {0:?}: expected a decimal unsigned 64-bit integer")]
    InvalidId(String),
    #[error("graph options must select at least one edge kind")]
    NoEdgeKinds,
    #[error("min_weight must be at least 1")]
    InvalidMinWeight,
    #[error("unknown edge kind {0:?}")]
    UnknownEdgeKind(String),
    #[error("labelling needs at least two follower sets, got {0}")]
    TooFewFollowerSets(usize),
    #[error("opinion vector needs exactly two groups; found group index {0}")]
    MoreThanTwoGroups(usize),
    #[error("opinion vector has {found} entries but the graph has {expected} nodes")]
    OpinionLengthMismatch { expected: usize, found: usize },
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("side {0} has no eligible nodes")]
    EmptySide(char),
    #[error("k_top must be at least 1")]
    InvalidKTop,
    #[error("walks_per_side must be at least 1")]
    InvalidWalkCount,
    #[error("conjugate gradient did not reach tolerance within {iterations} iterations (residual {residual:e})")]
    SolverDivergence { iterations: usize, residual: f64 },
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("layout frame must have positive width and height")]
    InvalidFrame,
}

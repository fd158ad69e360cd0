use thiserror::Error;

/// Errors produced by the network model and the engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed network description: {0}")]
    Parse(String),

    #[error("non-positive rate {rate} on edge {from} -> {to}")]
    NonPositiveRate { from: String, to: String, rate: f64 },

    #[error("non-positive generation rate lambda = {0}")]
    NonPositiveLambda(f64),

    #[error("unknown node label `{0}`")]
    UnknownNode(String),

    #[error("duplicate node label `{0}`")]
    DuplicateNode(String),

    #[error("node label `{0}` is reserved")]
    ReservedLabel(String),

    #[error("self loop on node `{0}`")]
    SelfLoop(String),

    #[error("multiple nodes with in-degree zero: {}", .0.join(", "))]
    MultipleSources(Vec<String>),

    #[error("source `{source_label}` has an incoming edge from `{from}`")]
    SourceHasIncomingEdge { source_label: String, from: String },

    #[error("node `{0}` is not reachable from the source")]
    UnreachableNode(String),

    #[error("empty subset")]
    EmptySubset,

    #[error("subset contains the virtual source node")]
    SubsetContainsVirtualSource,

    #[error("network has {nodes} nodes, exact engine limit is {limit}")]
    NetworkTooLarge { nodes: usize, limit: usize },

    #[error("s = {s} lies outside the convergence region (real part must be below {bound})")]
    OutsideConvergenceRegion { s: f64, bound: f64 },

    #[error("quadrature did not converge (achieved error estimate {estimate:e})")]
    QuadratureNotConverged { estimate: f64 },

    #[error("network is not a chain of blocks: {0}")]
    NotAChain(String),

    #[error("simulation window after burn-in is empty")]
    EmptyWindow,

    #[error("threshold {0} was not requested at simulation time")]
    ThresholdNotRequested(f64),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

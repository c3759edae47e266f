//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by graph construction, solvers and samplers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("conductance of edge {u}-{v} must be positive, got {c}")]
    NonpositiveConductance { u: String, v: String, c: f64 },

    #[error("edge {u}-{v} appears more than once (conductances {first} and {second})")]
    DuplicateEdge {
        u: String,
        v: String,
        first: f64,
        second: f64,
    },

    #[error("self-loop at vertex {0}")]
    SelfLoop(String),

    #[error("graph is not connected: only {reachable} of {total} vertices reachable")]
    Disconnected { reachable: usize, total: usize },

    #[error("graph has no vertices")]
    EmptyGraph,

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("unknown vertex id `{0}`")]
    UnknownVertex(String),

    #[error("exhaustion level {level} out of range 1..={levels}")]
    LevelOutOfRange { level: usize, levels: usize },

    #[error("no exterior to wire: level {0} already covers the whole window")]
    NoExteriorToWire(usize),

    #[error("invalid family parameters: {0}")]
    InvalidFamily(String),

    #[error("boundary set must be nonempty")]
    EmptyBoundary,

    #[error("vertex sets must be disjoint")]
    OverlappingSets,

    #[error("set K must lie inside the quotient window (offending vertex `{0}`)")]
    OutsideWindow(String),

    #[error("linear system is singular: {0}")]
    SingularSystem(String),

    #[error(
        "solver stalled: residual {residual:.3e} after {iterations} iterations (tolerance {tol:.1e})"
    )]
    NoConvergence {
        residual: f64,
        iterations: usize,
        tol: f64,
    },

    #[error("step budget {budget} exceeded (walk visited {visited} vertices)")]
    StepBudgetExceeded { budget: usize, visited: usize },

    #[error("escape probability is numerically zero; enlarge the window")]
    NoEscapeMass,

    #[error("measure is not normalized (total mass {0})")]
    UnnormalizedMeasure(f64),

    #[error("graph too large to enumerate spanning trees: {vertices} vertices (limit {limit})")]
    TooLargeToEnumerate { vertices: usize, limit: usize },

    #[error("truncation level {level} is not coupled to reference level {reference}")]
    UncoupledTruncation { level: usize, reference: usize },

    #[error("{0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

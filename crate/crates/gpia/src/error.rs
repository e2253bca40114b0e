//! Crate-wide error type.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("node id {id} out of range for a graph with {n} nodes")]
    NodeRange { id: usize, n: usize },

    #[error("self-loop on node {0}")]
    SelfLoop(usize),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("inconsistent input: {0}")]
    Consistency(String),

    #[error("invalid property: {0}")]
    Property(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("sampling exhausted after {attempts} attempts for sample {index}; consider densifying the graph")]
    SamplingExhausted { index: usize, attempts: usize },

    #[error("train/test split infeasible: {0}")]
    SplitInfeasible(String),

    #[error("densify failed: {0}")]
    DensifyFailed(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    Divergence { epoch: usize, loss: f64 },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("alignment infeasible: {0}")]
    AlignmentInfeasible(String),

    #[error("t-SNE affinities are degenerate: {0}")]
    AffinityDegenerate(String),

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("degenerate clustering: {0}")]
    DegenerateCluster(String),

    #[error("adversary knowledge does not support {attack}: {reason}")]
    Knowledge { attack: String, reason: String },

    #[error("group '{0}' is empty")]
    GroupEmpty(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("validation failed:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Wraps an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) fn precondition(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Precondition(msg()))
    }
}

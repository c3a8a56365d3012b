//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by graph construction, feature building, training, and I/O.
#[derive(Error, Debug)]
pub enum Error {
    #[error("edge references unknown node id `{node}` (edge {src} -> {dst})")]
    UnknownNode {
        node: String,
        src: String,
        dst: String,
    },

    #[error("self-loop edge on node `{node}` is not allowed")]
    SelfLoop { node: String },

    #[error("negative edge weight {weight} on edge {src} -> {dst}")]
    NegativeWeight { src: String, dst: String, weight: f64 },

    #[error("node `{node}` is isolated (degree 0); the normalized Laplacian is undefined")]
    IsolatedNode { node: String },

    #[error("matrix entries must be finite; found {value} at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize, value: f64 },

    #[error("shape mismatch in {op}: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    ShapeMismatch {
        op: String,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("graph has {nodes} nodes; brute-force census is limited to {limit}")]
    GraphTooLarge { nodes: usize, limit: usize },

    #[error("rewiring requires at least 2 edges; graph has {edges}")]
    TooFewEdges { edges: usize },

    #[error("significance ensemble must be >= 2; got {ensemble}")]
    EnsembleTooSmall { ensemble: usize },

    #[error("contingency table is all zeros")]
    EmptyContingency,

    #[error("box-cox requires strictly positive inputs; found {value} at index {index} (shift the data with shift_positive first)")]
    NonPositiveBoxcox { index: usize, value: f64 },

    #[error("one-hot category {category} out of range [0, {classes})")]
    CategoryOutOfRange { category: usize, classes: usize },

    #[error("node `{node}` is missing attribute `{attribute}`")]
    MissingAttribute { node: String, attribute: String },

    #[error("no discretization scheme configured for attribute `{attribute}`")]
    MissingScheme { attribute: String },

    #[error("motif-degree table does not cover node `{node}`")]
    MissingNmd { node: String },

    #[error("backward called before forward: no recorded trace")]
    BackwardBeforeForward,

    #[error("non-finite gradient in parameter `{name}`")]
    NonFiniteGradient { name: String },

    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("dynamic input is empty: at least one timestamp is required")]
    NoTimestamps,

    #[error("timestamp {index} covers {got} nodes; expected {expected}")]
    TimestampNodeMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },

    #[error("negative infection count {value}")]
    NegativeInfections { value: i64 },

    #[error("evaluation set is empty")]
    EmptyEvaluation,

    #[error("label {label} out of range [0, {classes})")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("train split is empty")]
    EmptyTrainSplit,

    #[error("validation split is empty")]
    EmptyValidationSplit,

    #[error("split ratios {0:?} do not sum to 1")]
    BadSplitRatios([f64; 3]),

    #[error("infeasible synthetic config: {reason}")]
    BadSynthConfig { reason: String },

    #[error("{path}:{line}: column `{column}`: {reason}")]
    Schema {
        path: String,
        line: usize,
        column: String,
        reason: String,
    },

    #[error("invalid config: {reason}")]
    BadConfig { reason: String },

    #[error("checkpoint is inconsistent: {reason}")]
    BadCheckpoint { reason: String },

    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error at {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<String>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

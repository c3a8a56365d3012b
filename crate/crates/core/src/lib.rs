//! Region-level infection-risk classification on geographical networks.
//!
//! The pipeline: build an undirected region graph from adjacency and
//! flight edges, count five transmission-motif degrees per node, assemble
//! an attribute feature tensor (chi-squared discretization plus one-hot
//! encoding) and a structural feature tensor (degree, transport, motif
//! counts), embed both with two-layer graph convolutions, fuse them with a
//! Hadamard, summation, or concatenation aggregator, and classify each
//! region into one of four risk levels. Static and dynamic (per-timestamp)
//! variants share the same classifier head.

pub mod artifacts;
pub mod data;
pub mod error;
pub mod features;
pub mod graph;
pub mod matrix;
pub mod model;
pub mod motifs;
pub mod nn;
pub mod pipeline;

pub use error::{Error, Result};
pub use graph::{build_graph, Graph};
pub use matrix::DenseMatrix;
pub use model::{AggregatorMode, Architecture, PandoraModel, RiskLevel};

//! Inductive link prediction on product co-purchase graphs.
//!
//! The crate covers the whole pipeline: parsing the SNAP `amazon-meta`
//! dump, building the item graph and leakage-free splits, assembling node
//! features, a small reverse-mode autodiff engine, four GNN encoders
//! (GraphSAGE, GAT, PinSAGE-style, LightGCN), neighbor samplers, and the
//! training/evaluation harness. The `copg` binary drives each stage.

// Negated float comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod cli;
pub mod error;
pub mod features;
pub mod graph;
pub mod ingest;
pub mod models;
pub mod rng;
pub mod sampler;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
pub use graph::{Edge, EdgeList, Graph, LabeledEdgeSet, NodeId, NodeSplit};

/// Version string reported by `--version` and embedded in manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// On-disk format identifiers understood by this build.
pub const FORMAT_VERSIONS: &[&str] = &["COPG1", "EMB1", "FTM1", "WLK1", "CKPT1"];

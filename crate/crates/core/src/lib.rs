//! Path-based relevance between node pairs of a heterogeneous information
//! network.
//!
//! The crate counts meta-path instances between node pairs, fits a
//! generative model of those counts by MAP block-coordinate descent, and
//! scores pairs by the penalized negative log-likelihood of their counts.
//! Classic meta-path measures (PathCount, PathSim, JoinSim, meta-path
//! SimRank) and the ranking metrics used to compare them live alongside.
//!
//! The crate is `no_std` (with `alloc`). Enabling `parallel` pulls in `std`
//! and `rayon` to update pattern-choice rows and count meta-paths
//! concurrently; results are identical either way.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod baselines;
pub mod count;
pub mod error;
pub mod eval;
pub mod graph;
pub mod infer;
pub mod math;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod relevance;
pub mod sample;
pub mod simplex;
pub mod synth;

pub use count::{count_paths, node_total_counts, PathCountTable, TableBuilder};
pub use error::{Error, Result};
pub use graph::{GraphBuilder, HeterogeneousGraph, MetaPath};
pub use infer::{estimate_alpha, fit, fit_variant, FitResult, TraceRow, Variant};
pub use matrix::Matrix;
pub use model::{objective, Convergence, PrepHyperparams, PrepParameters, Stopping};
pub use relevance::{prep_score, prep_scores, CompositeScoreTable, Direction, ScoreEntry};
pub use simplex::project_shrunken_simplex;

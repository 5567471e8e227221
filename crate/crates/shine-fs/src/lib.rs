//! Multi-view unsupervised feature selection via consensus anchors and an
//! adaptively learned hybrid-order similarity graph (SHINE-FS).
//!
//! The model reconstructs each view from a shared low-dimensional anchor
//! representation while jointly learning a first-order similarity graph over
//! raw sample distances and a second-order graph induced by shared anchor
//! affinities. Row-sparse projection matrices rank features; everything is
//! optimized by alternating closed-form or orthogonality-constrained updates.
//!
//! Entry points:
//! - [`optim::fit`] runs the full alternating optimization and returns a
//!   feature ranking.
//! - [`optim::select_features`] cuts the ranking at a ratio or count.
//! - [`eval`] scores selections with repeated k-means, clustering accuracy,
//!   and normalized mutual information.
//! - [`data`] loads CSV datasets and generates seeded synthetic ones.
//! - [`cli`] backs the `shine-fs` binary; see the `examples/` directory for
//!   library usage.

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod model;
pub mod optim;
pub mod solvers;

pub use error::{Result, ShineError};
pub use model::{
    EvalReport, FeatureRef, HyperParams, KSparseRowGraph, ModelState, MultiViewDataset,
};
pub use optim::{fit, select_features, FeatureCount, FitResult};


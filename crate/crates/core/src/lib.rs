//! Oriented-varifold kernel distances between curves in R^n, the node
//! similarity they induce on an embedded rooted tree, and reconstruction of
//! the tree topology from root-to-node path curves.
//!
//! The pipeline is:
//!
//! 1. [`tree`] generates (or loads) a rooted tree embedded in R^n with
//!    polyline edges, and extracts the root-to-node path of every node.
//! 2. [`geometry`] turns each path into a [`DiscreteVarifold`]: one weighted
//!    (center, unit tangent) atom per polyline segment.
//! 3. [`varifold`] evaluates the separable Gaussian kernel inner product
//!    between varifolds and from it squared distances and Gram matrices.
//! 4. [`similarity`] assembles the node similarity matrix (squared varifold
//!    distance between path curves) and measures how close it is to a tree
//!    metric.
//! 5. [`inference`] rebuilds the tree as a minimum spanning tree of the
//!    similarity matrix and compares it with ground truth.
//!
//! [`velocity`] is a synthetic front end that produces the path curves by
//! integrating an interpolated velocity field backward from sampled cells.

pub mod error;
pub mod exec;
pub mod geometry;
pub mod inference;
pub mod io;
pub mod similarity;
pub mod tree;
pub mod varifold;
pub mod velocity;

pub use error::{Error, Result};
pub use exec::Exec;
pub use geometry::{DiscreteVarifold, PolygonalCurve, VarifoldAtom};
pub use inference::{InferredTree, IsoMode};
pub use similarity::SimilarityMatrix;
pub use tree::{EmbedConfig, EmbeddedTree, RootedTree};
pub use varifold::KernelParams;

//! Finite (marked) ultrametric measure spaces.
//!
//! A genealogy of a finite population is stored as a canonical dendrogram:
//! leaves carry masses (and optionally a location and a genetic type),
//! internal nodes carry the pairwise distance realized at that merge.
//! Distances are in "distance units", twice the time back to the most
//! recent common ancestor, so that a population aging by `dt` sees every
//! distance grow by `2 dt`.
//!
//! Everything is generic over the scalar type ([`Scalar`], `f32` or `f64`);
//! the aliases below fix `f64`, which is what the simulators use.

pub mod decompose;
pub mod diagnostics;
pub mod error;
pub mod mark;
pub mod matrix;
pub mod ops;
pub mod polynomial;
pub mod sample;
pub mod scalar;
pub mod serial;
pub mod space;
pub mod stats;

pub use decompose::{compose, decompose, decompose_retaining, MassDecomposition};
pub use diagnostics::{
    canonical_hash, covering_number, diameter, gp_distance_bounds, isomorphic, pair_distance_law,
    tree_height, GpBounds, GpSearch,
};
pub use error::{GenealogyError, Result};
pub use mark::{LeafMark, Mark};
pub use matrix::{from_distance_matrix, from_distance_matrix_with, DistanceMatrixSample};
pub use ops::{
    ancestral_lines, concatenate, graft, graft_assigned, metric_transform, truncate, MetricMap,
};
pub use polynomial::{
    evaluate_polynomial, DistanceKernel, Estimate, EvalMode, EvalOptions, MarkFactor,
    Normalization, PolynomialSpec,
};
pub use sample::{sample_distance_matrix, LeafSampler};
pub use scalar::Scalar;
pub use serial::{from_json, to_json};
pub use space::{age, Digest, NodeId, TreeBuilder, UltrametricSpace};

/// Unmarked space over `f64`.
pub type Space = UltrametricSpace<f64>;
/// Space whose leaves carry a location and a type, over `f64`.
pub type MarkedSpace = UltrametricSpace<f64, Mark>;
/// Unmarked space over `f32`.
pub type Space32 = UltrametricSpace<f32>;
/// Marked space over `f32`.
pub type MarkedSpace32 = UltrametricSpace<f32, Mark>;

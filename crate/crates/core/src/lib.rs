//! Multi-policy Pareto front tracking (MPFT).
//!
//! Approximates the Pareto front of a multi-objective problem without a
//! policy population: one track per objective walks the front outward from
//! that objective's single-objective optimum, sparse regions of the merged
//! front are detected geometrically and filled by weight-adjusted anchor
//! policies, and everything merges into a non-dominated archive. Hypervolume,
//! sparsity, and interaction budgets quantify the result.

pub mod archive;
pub mod direction;
pub mod error;
pub mod metrics;
pub mod problems;
pub mod sparsity;
pub mod tracker;
pub mod types;

pub use archive::{dominates, ParetoArchive, Provenance, TrackedPolicy};
pub use direction::{
    is_pareto_stationary, min_norm_weights, min_norm_weights_2, pareto_ascent_direction,
    pareto_reverse_direction, project_simplex, DirectionResult,
};
pub use error::MpftError;
pub use metrics::{env_steps, hypervolume, hypervolume_mc, sparsity as sparsity_metric, MetricsReport};
pub use problems::{BiQuadratic, ConcaveGap, Problem, TabularMomdp, TabularMomdpSpec};
pub use sparsity::{
    delaunay, pca_project, region_boundaries, sparse_regions_2d, sparse_regions_3d, RegionReport,
    SparseRegion,
};
pub use tracker::{
    run_mpft, stage1_vertex, stage2_track, stage3_fill, track_cycle, weight_adjust_anchor,
    RunReport, StageReport, TrackConfig, TrackCounter,
};
pub use types::{GradientMatrix, ObjectiveVector, PolicyParams, WeightVector};

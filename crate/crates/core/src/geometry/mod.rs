//! Exact combinatorial geometry of n-particle cubes in `Z^{nd}` with the
//! max-norm. All lengths are integers in lattice units and all cubes are
//! open, so boxes that only share a face are disjoint.

mod cluster;
mod counting;
mod cube;
mod interactivity;
mod point;
mod separability;
pub mod suites;

pub use cluster::{decompose_clusters, ClusterPartition};
pub use counting::{count_singular, FlaggedCube, SingularCounts, EXACT_SEARCH_LIMIT};
pub use cube::{CubeSpec, RegionPair};
pub use interactivity::{
    classify_interactivity, pi_partition, projection_gap, projections_disjoint, Interactivity,
};
pub use point::{max_norm, OpenBox, ParticlePoint, ParticleSet};
pub use separability::{
    farthest_cluster, is_j_separable, is_separable_pair, min_separation_radius, separability_covering,
    SeparabilityResult, WitnessSide,
};

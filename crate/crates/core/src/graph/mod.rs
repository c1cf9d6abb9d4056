//! Edge-probability models, planted alternatives and graph samples.

pub mod io;
mod model;
mod sample;

pub use model::{
    check_set, vertex_set, EdgeProbabilityModel, PlantedAlternative, MAX_GRAPH_VERTICES,
    MAX_MATRIX_VERTICES, MAX_VERTICES,
};
pub use sample::{
    edges_across, edges_within, expected_edges_across_null, expected_edges_null,
    expected_total_null, sample_alternative, sample_null, sample_null_sparse, BitAdjacency,
    GraphSample, Hypothesis, SamplerKind,
};
pub(crate) use sample::{edges_across_unchecked, edges_within_unchecked, rng_from_seed};

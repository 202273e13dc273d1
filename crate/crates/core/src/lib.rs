//! Causality detection for forced (non-autonomous) dynamical systems.
//!
//! Two detectors share one pipeline: convergent cross mapping (CCM), which
//! embeds the effect series alone and scores cross-map skill by Pearson
//! correlation, and bivariate partial mapping (BPM), which embeds the effect
//! together with the forcing phase θ and scores skill by partial correlation
//! given θ. The `systems` module generates the forced coupled-logistic
//! benchmarks both detectors are evaluated on.

pub mod crossmap;
pub mod data;
pub mod detector;
pub mod embedding;
pub mod error;
pub mod stats;
pub mod systems;

pub use crossmap::{
    cross_map_estimate, cross_map_series, find_neighbors, simplex_weights, CrossMapOptions,
    CrossMapSeries, LibrarySample, NeighborSet,
};
pub use data::{load_csv, save_csv, CsvSchema, Dataset, DatasetMeta, TimeSeries};
pub use detector::{
    assess, run_direction, run_pairwise, CausalityVerdict, ConvergenceCriteria, ConvergenceCurve,
    DetectionConfig, DirectionResult, Method, PairwiseResult,
};
pub use embedding::{
    check_dimension_bound, embed_bivariate, embed_univariate, EmbeddingConfig, ShadowManifold,
};
pub use error::{Error, Result};
pub use stats::{partial_corr, pearson, skill, CorrelationResult};
pub use systems::{
    segmented_surrogate, simulate, staircase_theta, step_theta, Case, SegmentedSpec, SystemSpec,
    ThetaSpec,
};

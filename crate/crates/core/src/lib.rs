//! Optimal-design-based subsampling (ODBSS) for large-scale regression.
//!
//! The pipeline selects an informative size-`k` subsample in three stages:
//! a uniform pilot sample with density-based clustering to estimate the
//! design space, an approximate optimal design on that space, and a
//! matrix-distance allocation of the remaining points around the design's
//! support. Baseline subsamplers (uniform, IBOSS-style, OSMAC) and a
//! simulation benchmark harness are included.

pub mod clustering;
pub mod data;
pub mod design;
pub mod distances;
pub mod error;
pub mod experiment;
pub mod models;
pub mod sampler;
pub mod scenario;

pub use clustering::{
    dbscan_fit, epsilon_rule, grid_design_space, mh_design_space, ClusterModel, DesignSpace,
    SpaceSource,
};
pub use data::Dataset;
pub use design::{
    criterion_value, efficiency, info_matrix, optimize_design, reduce_support, Criterion, Design,
};
pub use distances::{distance, distance_row, Metric};
pub use error::{Error, Result};
pub use experiment::{
    run_experiment, summarize, ExperimentConfig, Method, ResultRow, SummaryRow,
};
pub use models::{fisher_info, fit_mle, log_likelihood, score, Family, InfoFactor, ModelSpec, ParamEstimate};
pub use scenario::{
    make_sigma, sample_covariates, sample_responses, CovariateLaw, Scenario, SigmaKind,
};
pub use sampler::{
    allocate, iboss_subsample, odbss, osmac_subsample, uniform_subsample, OdbssConfig,
    OsmacVariant, SpaceMode, StageTimings, SubsampleResult,
};

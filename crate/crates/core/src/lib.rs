//! CVRP instance features, primal-integral performance scoring, and 2D
//! instance-space projection.
//!
//! The crate is organized around a small data flow:
//! instance files → [`instance::Instance`] → [`features`] → metadata table →
//! [`pipeline`] (PRELIM → SIFTED → PILOT) → [`projection::ProjectionModel`] →
//! coordinates and [`plot`] output. [`perf`] turns incumbent trajectories
//! into the primal-integral values the pipeline consumes as performance data.

pub mod features;
pub mod instance;
pub mod metadata;
pub mod perf;
pub mod pipeline;
pub mod plot;
pub mod projection;
pub mod stats;
pub mod streams;
pub mod synthetic;

pub use features::{extract_all, ExtractConfig, Extraction, FeatureVector};
pub use instance::{parse_instance, DistanceMatrix, EdgeWeightType, Instance, ParseError};
pub use metadata::MetadataTable;
pub use perf::{primal_integral, PerformanceTable, Trajectory};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineOutput};
pub use projection::{builtin_model, project_batch, ProjectionModel};
pub use stats::StatSummary;

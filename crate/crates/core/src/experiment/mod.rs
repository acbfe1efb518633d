//! Experiment configuration, the staged pipeline behind `tm run`, manifests
//! and run comparison.

mod compare;
mod config;
mod reports;
mod run;

pub use compare::{compare_manifests, compare_report, CompareReport, QuantityDiff, RichardsonEstimate};
pub use config::{AlphaSpec, ExperimentConfig, SharpnessSpec, Stage, SurfaceSpec, SCHEMA_VERSION};
pub use reports::{
    bounds_stage, build_surface, green_stage, load_surface, maximize_one, problems, BoundsReport, BoundsRow,
    GreenOutcome, GreenReport, MaximizeReport, MeshReport, SpectrumReport, Surface,
};
pub use run::{
    config_hash, csv_bytes, num, run_experiment, sha256_hex, thread_pool, to_json_bytes, Artifact, ArtifactWriter,
    Manifest, StageRecord, TOOL_VERSION,
};

//! Benchmark harness: synthetic data, dataset ingestion, pipeline
//! evaluation and report emission.

pub mod dataset;
pub mod pipeline;
pub mod report;
pub mod run;
pub mod synth;

pub use dataset::{ingest_dataset, DatasetManifest, ManifestEntry};
pub use pipeline::{
    load_pipelines, parse_pipelines, train_on_dataset, train_on_images, Detector, PipelineSpec,
    Source,
};
pub use report::{emit_report, report_csv, report_markdown, ReportFormat};
pub use run::{run_benchmark, score_mask, BenchOptions, ReportRow};
pub use synth::{
    corrupt_mask, generate_scene, scene_id, synth_generate, CorruptionConfig, SynthConfig,
    SynthScene,
};

//! Horizon (skyline) detection in mountain images.
//!
//! Two dynamic-programming extractors find one horizon row per column: one
//! over a dense patch-classifier score map, one over a per-column region
//! energy with an edge reward. Binary sky masks can be cleaned with two
//! morphology pipelines and scored with pixel accuracy and mean absolute
//! horizon distance. [`bench`] ties these together over real or synthetic
//! datasets.

pub mod bench;
pub mod classifier;
pub mod error;
pub mod extract;
pub mod metrics;
pub mod postprocess;
pub mod raster;

pub use error::{Error, Result};

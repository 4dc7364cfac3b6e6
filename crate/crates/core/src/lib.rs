//! Toolkit for weather-degraded semantic segmentation pipelines.
//!
//! The crate covers the non-neural half of a segmentation challenge entry:
//!
//! - [`label`]: label maps, images and class metadata, plus colorized output.
//! - [`confusion`]: the mergeable confusion-matrix accumulator and IoU / mIoU.
//! - [`fusion`]: per-pixel hard voting over the outputs of several models.
//! - [`augment`]: seedable photometric and geometric augmentation.
//! - [`dataset`]: paired clear/adverse manifests, verification, statistics
//!   and offline expansion.
//! - [`baseline`]: trivial predictors used to drive the pipeline end to end.
//! - [`report`]: the model-comparison table in text and CSV form.
//! - [`pipeline`]: directory-level evaluate / fuse drivers used by the CLI.

pub mod augment;
pub mod baseline;
pub mod confusion;
pub mod dataset;
mod error;
pub mod fusion;
pub mod io;
pub mod label;
pub mod pipeline;
pub mod report;
pub mod rng;

pub use augment::{AugSpec, SamplePair};
pub use baseline::BaselinePredictor;
pub use confusion::ConfusionMatrix;
pub use error::{Error, Result};
pub use fusion::VoteStack;
pub use label::{ClassInfo, ClassSet, ImageBuffer, LabelMap, DEFAULT_IGNORE_INDEX};
pub use report::ReportRow;
pub use rng::{derive_stream, RandomStream};

//! Std front end for `flowae-core`: CSV ingestion, model artifacts, TOML
//! configuration, synthetic corpora and the pipeline stages behind the
//! `flowae` binary.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifact;
pub mod config;
pub mod csvio;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod synthetic;

pub use artifact::{ArtifactMeta, ModelArtifact, FORMAT_VERSION};
pub use config::{Overrides, PipelineConfig};
pub use error::{Error, Result};
pub use synthetic::SyntheticSpec;

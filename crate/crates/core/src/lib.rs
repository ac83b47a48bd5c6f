//! Benign-only anomaly detection for network flow sequences.
//!
//! The crate trains an LSTM autoencoder on benign traffic under a weighted
//! sum of reconstruction loss and triplet margin loss, calibrates a
//! percentile threshold on benign reconstruction errors, and flags sequences
//! whose error exceeds it. Supporting pieces cover min-max normalization,
//! windowing into fixed-length sequences, SMOTE oversampling, evaluation
//! metrics and closed-form threat-model calculators.
//!
//! Everything here is `no_std` with `alloc`; file formats, CSV parsing and
//! the command line live in the `flowae` crate.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod detector;
pub mod error;
pub mod flow;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod sequencer;
pub mod smote;
pub mod threat;
pub mod trainer;

mod lstm;

pub use detector::{calibrate, calibrate_from_errors, classify, percentile, ThresholdModel, Verdict};
pub use error::{Error, Result};
pub use flow::{
    fit_normalizer, normalize, split_benign, FlowRecord, FlowSchema, FlowTable, Label,
    NormalizationStats,
};
pub use matrix::Matrix;
pub use metrics::{
    compute_metrics, latent_cohesion, ConfusionCounts, CoreMetrics, EvalReport, PrPoint,
};
pub use model::{
    reconstruction_error, AutoencoderModel, LatentCode, ModelConfig, ModelMode, ParamGroup,
};
pub use sequencer::{build_sequences, make_triplets, Sequence, Triplet, TripletConfig};
pub use smote::{smote_oversample, SmoteConfig};
pub use trainer::{
    joint_loss, train, triplet_margin_loss, FreezeSpec, LossBreakdown, TrainConfig, TrainReport,
};

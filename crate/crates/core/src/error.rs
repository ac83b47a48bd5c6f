use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("insufficient data: need at least {needed} records, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("no benign records to split")]
    NoBenignRecords,
    #[error("sequence length {length} exceeds the {available} available flows")]
    SequenceLongerThanData { length: usize, available: usize },
    #[error("need at least two sequences with distinct start indices to build triplets")]
    NeedAtLeastTwoSequences,
    #[error("training data must be benign; found an attack-labeled item at position {0}")]
    AttackInTrainingData(usize),
    #[error("SMOTE needs more than k={k} records, got {got}")]
    TooFewRecords { k: usize, got: usize },
    #[error("SMOTE target count {target} is below the input count {input}")]
    TargetBelowInput { target: usize, input: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("loss became non-finite at epoch {epoch}")]
    DivergedLoss { epoch: usize },
    #[error("empty calibration set")]
    EmptyCalibrationSet,
    #[error("attack sequence starting at {start_index} has no category")]
    UnknownCategory { start_index: usize },
    #[error("need at least two latent codes, got {0}")]
    InsufficientCodes(usize),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },
}

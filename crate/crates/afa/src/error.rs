//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed dataset line {line}: {source}")]
    MalformedLine {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("study {study_id}: expected {expected} slots, found {got}")]
    WrongSlotCount {
        study_id: String,
        expected: usize,
        got: usize,
    },

    #[error("study {study_id}: feature dimension {got} does not match dataset dimension {expected}")]
    InconsistentDim {
        study_id: String,
        expected: usize,
        got: usize,
    },

    #[error("study {study_id}: label {label} outside {{0, 1, 2}}")]
    LabelOutOfRange { study_id: String, label: u8 },

    #[error("study {study_id}, slot {slot}: non-finite feature value")]
    NonFiniteFeature { study_id: String, slot: usize },

    #[error("study {study_id}, slot {slot}: negative cost {cost}")]
    NegativeCost {
        study_id: String,
        slot: usize,
        cost: f32,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("mask length {got} does not match slot count {expected}")]
    MaskLength { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("checkpoint does not match expected architecture: {0}")]
    CheckpointMismatch(String),

    #[error("non-finite gradient in parameter {param}")]
    NonFiniteGradient { param: String },

    #[error("non-finite training loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("step called on a finished episode")]
    StepOnDone,

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("no valid action available")]
    NoValidAction,

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable tag for the CLI's error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::MalformedLine { .. } => "malformed_line",
            Error::WrongSlotCount { .. } => "wrong_slot_count",
            Error::InconsistentDim { .. } => "inconsistent_dim",
            Error::LabelOutOfRange { .. } => "label_out_of_range",
            Error::NonFiniteFeature { .. } => "non_finite_feature",
            Error::NegativeCost { .. } => "negative_cost",
            Error::EmptyDataset => "empty_dataset",
            Error::MaskLength { .. } => "mask_length",
            Error::InvalidConfig(_) => "invalid_config",
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::CheckpointMismatch(_) => "checkpoint_mismatch",
            Error::NonFiniteGradient { .. } => "non_finite_gradient",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::StepOnDone => "step_on_done",
            Error::InvalidAction(_) => "invalid_action",
            Error::NoValidAction => "no_valid_action",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

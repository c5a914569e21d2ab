//! Training loop, sliding-window streaming inference, checkpointing, and
//! the dataset preparation they share.

pub mod checkpoint;
pub mod dataset;
pub mod infer;
pub mod train;

pub use checkpoint::{
    load_checkpoint, load_checkpoint_into, save_checkpoint, CheckpointManifest,
    CHECKPOINT_SCHEMA_VERSION,
};
pub use dataset::{PreparedDataset, PreparedSequence};
pub use infer::{infer_sequence, StreamFrame, StreamPredictor};
pub use train::{learning_rate, train, StepRecord, TrainConfig, TrainOptions, TrainOutcome};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("checkpoint schema error: {0}")]
    Schema(String),
    #[error("checkpoint shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite loss at step {step}{}", match last_checkpoint {
        Some(p) => format!("; last good checkpoint at {}", p.display()),
        None => String::new(),
    })]
    NonFiniteLoss {
        step: u64,
        last_checkpoint: Option<PathBuf>,
    },
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Loss(#[from] crate::loss::LossError),
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error(transparent)]
    Skeleton(#[from] crate::skeleton::SkeletonError),
    #[error(transparent)]
    Rotation(#[from] crate::rotation::RotationError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

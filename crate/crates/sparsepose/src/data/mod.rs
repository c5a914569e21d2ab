//! Motion file format, synthetic motion generation, tracking-signal
//! derivation, contact masks, floor calibration, and training windows.

pub mod motion;
pub mod signals;
pub mod synth;
pub mod windows;

pub use motion::{load_motion, save_motion, Frame, MotionSequence, MOTION_SCHEMA_VERSION};
pub use signals::{
    derive_contact_mask, derive_contact_mask_with, derive_tracking_signals, floor_calibrate,
    ContactMask, ContactParams, TrackingSignals, SIGNAL_WIDTH,
};
pub use synth::{synth_generate, MotionKind};
pub use windows::{window_batches, TrainingWindow, WindowBatches, WindowSampler};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("motion file format error: {0}")]
    Format(String),
    #[error("unsupported motion schema version {found} (expected {expected})")]
    Version { found: u64, expected: u64 },
    #[error("unknown motion kind '{0}'")]
    UnknownKind(String),
    #[error("sequence too short: length {len} < window {window}")]
    SequenceTooShort { len: usize, window: usize },
    #[error("invalid argument: {0}")]
    InvalidArg(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Skeleton(#[from] crate::skeleton::SkeletonError),
    #[error(transparent)]
    Rotation(#[from] crate::rotation::RotationError),
}

//! Motion cues on thermal frames: the soft motion mask and motion history
//! image, MHI-biased attention weights, and single-person presence
//! detection.

mod attention;
mod mhi;
mod presence;

pub use attention::biased_attention;
pub use mhi::{
    mhi_update, normalize_celsius, sigmoid, soft_motion_mask, MhiParams, MhiTracker, MotionHistoryImage, NORM_MAX_C,
    NORM_MIN_C,
};
pub use presence::{detect_presence, estimate_ambient, mask_frame, BoundingBox, PresenceDetection, PresenceParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MotionError {
    #[error("grid is {found:?} but {expected:?} was expected")]
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix must be square and non-empty; row {row} has {len} entries for n = {n}")]
    Shape { row: usize, len: usize, n: usize },
    #[error("bounding box {0:?} lies outside the frame")]
    OutOfBounds(BoundingBox),
}

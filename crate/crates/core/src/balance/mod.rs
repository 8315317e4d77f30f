//! Biomechanical balance: center of mass, base of support and the signed
//! margin between them, plus the SB / LoB / GIS segmentation built on it.

mod anthropometry;
mod smob;
mod states;
mod support;

pub use anthropometry::{compute_com, AnthropometricTable, Segment};
pub use smob::{smob_trajectory, SmobSample, SmobTrajectory, DESCENT_SPEED_EPS};
pub use states::{label_frames, segment_states, BalanceState, BalanceStateSequence, FrameBalance, SegmentationParams};
pub use support::{compute_bos, signed_margin, Degeneracy, SupportPolygon};

/// Foot joints within this height (m) of the ground count as contacts.
pub const DEFAULT_CONTACT_EPSILON: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum BalanceError {
    #[error("invalid anthropometric table: {0}")]
    InvalidTable(String),
    #[error("segment {segment:?} references joint {index} but the pose has {joint_count}")]
    JointIndex { segment: String, index: usize, joint_count: usize },
    #[error("trajectory has {trajectory} samples but the sequence has {poses} frames")]
    LengthMismatch { trajectory: usize, poses: usize },
    #[error("topology lacks required joint {0:?}")]
    MissingJoint(String),
}

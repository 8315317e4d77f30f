//! Thermal-array observation synthesis: pinhole projection, capsule
//! silhouettes with per-part surface temperatures, velocity-dependent
//! exponential motion blur and sensor noise.

mod blur;
mod camera;
mod psf;
mod render;
mod scene;
mod simulate;

pub use blur::{apply_motion_blur, blur_and_noise, part_motions, BlurParams, PartMotion};
pub use camera::{
    sample_virtual_camera, subject_center, CameraBounds, CameraModel, REFERENCE_HFOV_DEG, REFERENCE_VFOV_DEG,
};
pub use psf::{psf_kernel, PsfKernel, DEFAULT_TRUNCATION};
pub use render::{render_background, render_frame, BodyPart, BodyThermalProfile, HotObject, RenderedScene};
pub use scene::{load_scene, CameraSpec, Scene, SceneFile};
pub use simulate::{frame_seed, render_sequence, simulate_sequence, GroundTruth, SimParams, Simulation};

use crate::balance::BalanceError;
use crate::pose::PoseError;

#[derive(Debug, thiserror::Error)]
pub enum ThermalError {
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("empty sampling range: {0}")]
    EmptyRange(String),
    #[error("invalid blur parameters: {0}")]
    InvalidPsf(String),
    #[error("invalid thermal profile: {0}")]
    InvalidProfile(String),
    #[error("frame is {found:?} but the camera is {expected:?}")]
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },
    #[error("scene: {0}")]
    Scene(String),
    #[error(transparent)]
    Balance(#[from] BalanceError),
    #[error(transparent)]
    Pose(#[from] PoseError),
}

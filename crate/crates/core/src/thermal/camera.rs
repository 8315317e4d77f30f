use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ThermalError;
use crate::frame::{REFERENCE_HEIGHT, REFERENCE_WIDTH};
use crate::geometry::{Mat3, Vec3};
use crate::pose::{ImagePoint, Pose25D, PoseSequence, WorldPose};

pub const REFERENCE_HFOV_DEG: f64 = 90.0;
pub const REFERENCE_VFOV_DEG: f64 = 67.0;

/// Pinhole camera. Camera axes: x right, y down, z along the optical axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    width: usize,
    height: usize,
    hfov: f64,
    vfov: f64,
    position: Vec3,
    /// World-to-camera rotation; rows are the camera axes in world terms.
    rotation: Mat3,
}

impl CameraModel {
    /// Field of view angles in degrees.
    pub fn new(
        width: usize,
        height: usize,
        hfov_deg: f64,
        vfov_deg: f64,
        position: Vec3,
        rotation: Mat3,
    ) -> Result<Self, ThermalError> {
        if width == 0 || height == 0 {
            return Err(ThermalError::InvalidCamera(format!("image size {width}x{height}")));
        }
        for fov in [hfov_deg, vfov_deg] {
            if !(fov > 0.0 && fov < 180.0) {
                return Err(ThermalError::InvalidCamera(format!("field of view {fov} deg outside (0, 180)")));
            }
        }
        if !position.is_finite() {
            return Err(ThermalError::InvalidCamera("non-finite position".into()));
        }
        Ok(Self { width, height, hfov: hfov_deg.to_radians(), vfov: vfov_deg.to_radians(), position, rotation })
    }

    /// Camera at `position` aimed at `target`, keeping world z up.
    pub fn look_at(
        width: usize,
        height: usize,
        hfov_deg: f64,
        vfov_deg: f64,
        position: Vec3,
        target: Vec3,
    ) -> Result<Self, ThermalError> {
        let forward = (target - position)
            .normalized()
            .ok_or_else(|| ThermalError::InvalidCamera("target coincides with position".into()))?;
        let right = forward.cross(Vec3::UP).normalized().unwrap_or(Vec3::new(1.0, 0.0, 0.0));
        let down = forward.cross(right);
        Self::new(width, height, hfov_deg, vfov_deg, position, Mat3::from_rows(right, down, forward))
    }

    /// 80x62 pixels, 90° x 67° field of view.
    pub fn reference_sensor(position: Vec3, target: Vec3) -> Result<Self, ThermalError> {
        Self::look_at(REFERENCE_WIDTH, REFERENCE_HEIGHT, REFERENCE_HFOV_DEG, REFERENCE_VFOV_DEG, position, target)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn position(&self) -> Vec3 {
        self.position
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    /// Horizontal focal length in pixels.
    pub fn fx(&self) -> f64 {
        (self.width as f64 / 2.0) / (self.hfov / 2.0).tan()
    }

    pub fn fy(&self) -> f64 {
        (self.height as f64 / 2.0) / (self.vfov / 2.0).tan()
    }

    /// Mean focal length, used to size blobs.
    pub fn focal(&self) -> f64 {
        0.5 * (self.fx() + self.fy())
    }

    pub fn to_camera(&self, p: Vec3) -> Vec3 {
        self.rotation.apply(p - self.position)
    }

    /// Normalized image coordinates and depth; `None` when behind the camera.
    pub fn project(&self, p: Vec3) -> Option<ImagePoint> {
        let c = self.to_camera(p);
        if c.z <= 0.0 {
            return None;
        }
        Some(ImagePoint {
            u: 0.5 + (c.x / c.z) * self.fx() / self.width as f64,
            v: 0.5 + (c.y / c.z) * self.fy() / self.height as f64,
            depth: c.z,
        })
    }

    pub fn unproject(&self, ip: ImagePoint) -> Vec3 {
        let x = (ip.u - 0.5) * self.width as f64 / self.fx() * ip.depth;
        let y = (ip.v - 0.5) * self.height as f64 / self.fy() * ip.depth;
        self.rotation.transpose().apply(Vec3::new(x, y, ip.depth)) + self.position
    }

    /// Continuous pixel coordinates; pixel `(i, j)` spans `[i, i+1) x [j, j+1)`.
    pub fn to_pixel(&self, ip: ImagePoint) -> (f64, f64) {
        (ip.u * self.width as f64, ip.v * self.height as f64)
    }

    pub fn project_pose(&self, pose: &WorldPose) -> Pose25D {
        Pose25D { joints: pose.joints.iter().map(|&p| self.project(p)).collect(), timestamp: pose.timestamp }
    }
}

/// Support of the virtual-camera distribution: ring radius and height
/// around a target point plus an azimuth interval (radians).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraBounds {
    pub radius: (f64, f64),
    pub height: (f64, f64),
    pub yaw: (f64, f64),
    pub target: Vec3,
}

impl Default for CameraBounds {
    fn default() -> Self {
        Self {
            radius: (2.5, 4.5),
            height: (1.0, 2.4),
            yaw: (0.0, std::f64::consts::TAU),
            target: Vec3::new(0.0, 0.0, 0.8),
        }
    }
}

fn sample_range(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64), what: &str) -> Result<f64, ThermalError> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(ThermalError::EmptyRange(format!("{what} range [{lo}, {hi}]")));
    }
    let u: f64 = rng.random();
    Ok(if lo == hi { lo } else { lo + (hi - lo) * u })
}

/// Reference sensor placed uniformly at random within `bounds`, aimed at
/// the bounds' target. Deterministic per seed.
pub fn sample_virtual_camera(rng_seed: u64, bounds: &CameraBounds) -> Result<CameraModel, ThermalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let radius = sample_range(&mut rng, bounds.radius, "radius")?;
    let height = sample_range(&mut rng, bounds.height, "height")?;
    let yaw = sample_range(&mut rng, bounds.yaw, "yaw")?;
    if radius < 0.0 {
        return Err(ThermalError::EmptyRange(format!("negative radius {radius}")));
    }
    let position = Vec3::new(
        bounds.target.x + radius * yaw.cos(),
        bounds.target.y + radius * yaw.sin(),
        height,
    );
    CameraModel::reference_sensor(position, bounds.target)
}

/// Center of the axis-aligned box around every joint of the sequence.
pub fn subject_center(seq: &PoseSequence<WorldPose>) -> Option<Vec3> {
    let mut it = seq.frames().iter().flat_map(|f| f.joints.iter());
    let first = *it.next()?;
    let (lo, hi) = it.fold((first, first), |(lo, hi), p| {
        (
            Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z)),
            Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z)),
        )
    });
    Some((lo + hi) * 0.5)
}

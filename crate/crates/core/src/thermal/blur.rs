use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{psf_kernel, BodyThermalProfile, CameraModel, PsfKernel, RenderedScene, ThermalError, DEFAULT_TRUNCATION};
use crate::frame::{seconds_to_us, TemperatureFrame, ThermalImage};
use crate::geometry::Vec2;
use crate::pose::WorldPose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlurParams {
    /// Sensor response time, seconds.
    pub tau: f64,
    /// Additive Gaussian noise std, degrees Celsius.
    pub sigma_noise: f64,
    /// PSF support in multiples of its scale.
    pub truncation: f64,
}

impl Default for BlurParams {
    fn default() -> Self {
        Self { tau: 0.10, sigma_noise: 0.0, truncation: DEFAULT_TRUNCATION }
    }
}

/// Image-plane motion of one body part between two poses.
#[derive(Debug, Clone, PartialEq)]
pub struct PartMotion {
    /// Unit direction in pixel coordinates.
    pub direction: Vec2,
    pub kernel: PsfKernel,
}

/// Blur kernel and direction for each profile part, from the displacement
/// of its projected midpoint over the frame interval.
pub fn part_motions(
    prev_pose: &WorldPose,
    cur_pose: &WorldPose,
    camera: &CameraModel,
    profile: &BodyThermalProfile,
    params: &BlurParams,
) -> Result<Vec<PartMotion>, ThermalError> {
    let dt = cur_pose.timestamp - prev_pose.timestamp;
    let still = PartMotion { direction: Vec2::ZERO, kernel: PsfKernel::identity() };
    profile
        .parts
        .iter()
        .map(|part| {
            let mid = |pose: &WorldPose| {
                let a = pose.joints.get(part.joints.0)?;
                let b = pose.joints.get(part.joints.1)?;
                camera.project(a.lerp(*b, 0.5))
            };
            let (Some(p0), Some(p1)) = (mid(prev_pose), mid(cur_pose)) else {
                return Ok(still.clone());
            };
            if dt <= 0.0 {
                return Ok(still.clone());
            }
            let (x0, y0) = camera.to_pixel(p0);
            let (x1, y1) = camera.to_pixel(p1);
            let disp = Vec2::new(x1 - x0, y1 - y0);
            let dist = disp.norm();
            if dist == 0.0 {
                return Ok(still.clone());
            }
            // pixels per meter at the part's depth
            let r = camera.focal() / p1.depth;
            let speed = dist / dt / r;
            Ok(PartMotion { direction: disp / dist, kernel: psf_kernel(speed, r, params.tau, params.truncation)? })
        })
        .collect()
}

/// Spreads `value` bilinearly around the continuous pixel position
/// `(x, y)`, where pixel `(i, j)` has its center at `(i + 1/2, j + 1/2)`.
fn splat(img: &mut ThermalImage, x: f64, y: f64, value: f64) {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let fx = x - 0.5;
    let fy = y - 0.5;
    let x0 = fx.floor();
    let y0 = fy.floor();
    let tx = fx - x0;
    let ty = fy - y0;
    let (x0, y0) = (x0 as isize, y0 as isize);
    for (dx, dy, wgt) in [
        (0, 0, (1.0 - tx) * (1.0 - ty)),
        (1, 0, tx * (1.0 - ty)),
        (0, 1, (1.0 - tx) * ty),
        (1, 1, tx * ty),
    ] {
        let (px, py) = (x0 + dx, y0 + dy);
        if wgt != 0.0 && px >= 0 && py >= 0 && px < w && py < h {
            *img.get_mut(px as usize, py as usize) += value * wgt;
        }
    }
}

/// Applies each part's PSF to that part's pixels only, leaving the
/// background sharp. A part moving along `d` leaves a trail behind it: the
/// tap at displacement `k` lands `k` pixels against `d`.
pub fn apply_motion_blur(scene: &RenderedScene, motions: &[PartMotion]) -> ThermalImage {
    let mut out = scene.image.clone();
    let (w, h) = scene.image.dims();
    let mut by_part: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); motions.len()];
    for y in 0..h {
        for x in 0..w {
            if let Some(part) = *scene.owner.get(x, y) {
                if let Some(list) = by_part.get_mut(part as usize) {
                    list.push((x, y, scene.image.get(x, y) - scene.background.get(x, y)));
                }
            }
        }
    }
    for (motion, pixels) in motions.iter().zip(&by_part) {
        if motion.kernel.is_identity() {
            continue;
        }
        for &(x, y, excess) in pixels {
            *out.get_mut(x, y) -= excess;
        }
        for &(x, y, excess) in pixels {
            let cx = x as f64 + 0.5;
            let cy = y as f64 + 0.5;
            for (k, &wk) in motion.kernel.taps().iter().enumerate() {
                let k = k as f64;
                splat(&mut out, cx - k * motion.direction.x, cy - k * motion.direction.y, wk * excess);
            }
        }
    }
    out
}

/// Motion blur per body part, additive Gaussian noise, then quantization to
/// centi-degrees. The frame carries the current pose's timestamp and
/// `seq_no` 0.
pub fn blur_and_noise(
    scene: &RenderedScene,
    prev_pose: &WorldPose,
    cur_pose: &WorldPose,
    camera: &CameraModel,
    profile: &BodyThermalProfile,
    params: &BlurParams,
    rng_seed: u64,
) -> Result<TemperatureFrame, ThermalError> {
    if scene.image.dims() != (camera.width(), camera.height()) {
        return Err(ThermalError::DimensionMismatch {
            expected: (camera.width(), camera.height()),
            found: scene.image.dims(),
        });
    }
    if !(params.sigma_noise >= 0.0 && params.sigma_noise.is_finite()) {
        return Err(ThermalError::InvalidPsf(format!("noise sigma {}", params.sigma_noise)));
    }
    let motions = part_motions(prev_pose, cur_pose, camera, profile, params)?;
    let mut img = apply_motion_blur(scene, &motions);
    if params.sigma_noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let normal = Normal::new(0.0, params.sigma_noise).expect("sigma validated above");
        for t in img.data_mut() {
            *t += normal.sample(&mut rng);
        }
    }
    Ok(TemperatureFrame::quantize(&img, seconds_to_us(cur_pose.timestamp), 0))
}

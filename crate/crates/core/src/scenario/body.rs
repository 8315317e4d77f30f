//! Key postures of the 17-joint skeleton in a body-local frame: x to the
//! subject's right, y forward, z up, origin on the ground midway between the
//! ankles.

use crate::geometry::{Vec2, Vec3};
use crate::pose::{joint, WorldPose};

pub type Posture = [Vec3; 17];

/// Uniform size scaling around a 1.75 m adult.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyShape {
    pub scale: f64,
}

impl Default for BodyShape {
    fn default() -> Self {
        Self { scale: 1.0 }
    }
}

const fn v(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

/// Foot joints keep their height so ground contact does not depend on size.
fn scaled(shape: &BodyShape, mut p: Posture) -> Posture {
    for (i, j) in p.iter_mut().enumerate() {
        let keep_z = matches!(i, joint::L_ANKLE | joint::R_ANKLE | joint::L_FOOT | joint::R_FOOT) && j.z < 0.1;
        let z = j.z;
        *j = *j * shape.scale;
        if keep_z {
            j.z = z;
        }
    }
    p
}

const STAND: Posture = [
    v(0.0, 0.06, 1.62),
    v(0.0, 0.06, 1.45),
    v(-0.19, 0.06, 1.42),
    v(0.19, 0.06, 1.42),
    v(-0.21, 0.06, 1.13),
    v(0.21, 0.06, 1.13),
    v(-0.22, 0.08, 0.87),
    v(0.22, 0.08, 0.87),
    v(0.0, 0.06, 0.95),
    v(-0.10, 0.06, 0.93),
    v(0.10, 0.06, 0.93),
    v(-0.10, 0.08, 0.50),
    v(0.10, 0.08, 0.50),
    v(-0.10, 0.0, 0.04),
    v(0.10, 0.0, 0.04),
    v(-0.10, 0.16, 0.02),
    v(0.10, 0.16, 0.02),
];

/// Seated on a chair or bed edge, trunk slightly forward, hands on thighs.
const SIT: Posture = [
    v(0.0, -0.04, 1.15),
    v(0.0, -0.10, 0.99),
    v(-0.19, -0.11, 0.96),
    v(0.19, -0.11, 0.96),
    v(-0.20, -0.05, 0.70),
    v(0.20, -0.05, 0.70),
    v(-0.16, 0.14, 0.58),
    v(0.16, 0.14, 0.58),
    v(0.0, -0.26, 0.52),
    v(-0.10, -0.26, 0.50),
    v(0.10, -0.26, 0.50),
    v(-0.10, 0.12, 0.50),
    v(0.10, 0.12, 0.50),
    v(-0.10, 0.0, 0.04),
    v(0.10, 0.0, 0.04),
    v(-0.10, 0.16, 0.02),
    v(0.10, 0.16, 0.02),
];

/// Deep squat with heels down; the trunk leans forward to keep balance.
const CROUCH: Posture = [
    v(0.0, 0.22, 0.93),
    v(0.0, 0.17, 0.80),
    v(-0.19, 0.16, 0.77),
    v(0.19, 0.16, 0.77),
    v(-0.22, 0.26, 0.55),
    v(0.22, 0.26, 0.55),
    v(-0.20, 0.34, 0.36),
    v(0.20, 0.34, 0.36),
    v(0.0, -0.12, 0.44),
    v(-0.12, -0.12, 0.42),
    v(0.12, -0.12, 0.42),
    v(-0.14, 0.30, 0.44),
    v(0.14, 0.30, 0.44),
    v(-0.10, 0.0, 0.04),
    v(0.10, 0.0, 0.04),
    v(-0.10, 0.16, 0.02),
    v(0.10, 0.16, 0.02),
];

/// Bent at the hips reaching toward the floor, hips pushed back.
const BEND: Posture = [
    v(0.0, 0.40, 0.86),
    v(0.0, 0.26, 0.93),
    v(-0.19, 0.24, 0.91),
    v(0.19, 0.24, 0.91),
    v(-0.20, 0.28, 0.62),
    v(0.20, 0.28, 0.62),
    v(-0.18, 0.30, 0.36),
    v(0.18, 0.30, 0.36),
    v(0.0, -0.20, 0.82),
    v(-0.10, -0.20, 0.80),
    v(0.10, -0.20, 0.80),
    v(-0.10, 0.10, 0.47),
    v(0.10, 0.10, 0.47),
    v(-0.10, 0.0, 0.04),
    v(0.10, 0.0, 0.04),
    v(-0.10, 0.16, 0.02),
    v(0.10, 0.16, 0.02),
];

/// Lying on the back across a 0.5 m high bed behind the subject.
const LIE_BED: Posture = [
    v(-0.85, -0.45, 0.64),
    v(-0.68, -0.45, 0.62),
    v(-0.65, -0.64, 0.62),
    v(-0.65, -0.26, 0.62),
    v(-0.38, -0.68, 0.60),
    v(-0.38, -0.22, 0.60),
    v(-0.12, -0.66, 0.60),
    v(-0.12, -0.24, 0.60),
    v(-0.18, -0.45, 0.62),
    v(-0.16, -0.55, 0.60),
    v(-0.16, -0.35, 0.60),
    v(0.27, -0.55, 0.64),
    v(0.27, -0.35, 0.64),
    v(0.70, -0.55, 0.60),
    v(0.70, -0.35, 0.60),
    v(0.72, -0.55, 0.76),
    v(0.72, -0.35, 0.76),
];

pub fn stand_posture(shape: &BodyShape) -> Posture {
    scaled(shape, STAND)
}

pub fn sit_posture(shape: &BodyShape) -> Posture {
    scaled(shape, SIT)
}

pub fn crouch_posture(shape: &BodyShape) -> Posture {
    scaled(shape, CROUCH)
}

pub fn bend_posture(shape: &BodyShape) -> Posture {
    scaled(shape, BEND)
}

pub fn lie_bed_posture(shape: &BodyShape) -> Posture {
    scaled(shape, LIE_BED)
}

pub fn lerp_posture(a: &Posture, b: &Posture, t: f64) -> Posture {
    std::array::from_fn(|i| a[i].lerp(b[i], t))
}

pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Where the body-local frame sits in the world. `heading` is the world
/// direction (radians from +x) of the subject's forward axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub origin: Vec2,
    pub heading: f64,
}

impl Default for Placement {
    /// Facing world +y at the origin, so local and world axes coincide.
    fn default() -> Self {
        Self { origin: Vec2::ZERO, heading: std::f64::consts::FRAC_PI_2 }
    }
}

impl Placement {
    pub fn new(origin: Vec2, heading: f64) -> Self {
        Self { origin, heading }
    }

    pub fn forward(&self) -> Vec2 {
        Vec2::new(self.heading.cos(), self.heading.sin())
    }

    pub fn right(&self) -> Vec2 {
        Vec2::new(self.heading.sin(), -self.heading.cos())
    }

    pub fn to_world(&self, p: Vec3) -> Vec3 {
        let f = self.forward();
        let r = self.right();
        Vec3::new(
            self.origin.x + p.x * r.x + p.y * f.x,
            self.origin.y + p.x * r.y + p.y * f.y,
            p.z,
        )
    }

    pub fn pose(&self, posture: &Posture, timestamp: f64) -> WorldPose {
        WorldPose::new(posture.iter().map(|&p| self.to_world(p)).collect(), timestamp)
    }
}

/// Upright stance at the world origin facing +y.
pub fn standing_pose(shape: &BodyShape, timestamp: f64) -> WorldPose {
    Placement::default().pose(&stand_posture(shape), timestamp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balance::{compute_bos, compute_com, signed_margin, AnthropometricTable};
    use crate::pose::SkeletonTopology;

    fn margin(p: &Posture) -> Option<f64> {
        let pose = Placement::default().pose(p, 0.0);
        let com = compute_com(&pose, &AnthropometricTable::default_table()).unwrap();
        let bos = compute_bos(&pose, &SkeletonTopology::default_17().contact_joints(), 0.05)?;
        Some(signed_margin(com.horizontal(), &bos))
    }

    #[test]
    fn upright_and_supported_postures_are_stable() {
        let shape = BodyShape::default();
        for (name, p) in [("stand", stand_posture(&shape)), ("crouch", crouch_posture(&shape)), ("bend", bend_posture(&shape))] {
            let m = margin(&p).unwrap();
            assert!(m > 0.02, "{name}: {m}");
        }
    }

    #[test]
    fn seated_com_sits_just_behind_the_heels() {
        let m = margin(&sit_posture(&BodyShape::default())).unwrap();
        assert!((-0.145..0.0).contains(&m), "{m}");
    }

    #[test]
    fn lying_on_bed_has_no_ground_contact() {
        assert!(margin(&lie_bed_posture(&BodyShape::default())).is_none());
    }

    #[test]
    fn scaling_keeps_feet_on_the_ground() {
        let p = stand_posture(&BodyShape { scale: 1.1 });
        assert_eq!(p[joint::L_ANKLE].z, 0.04);
        assert!((p[joint::HEAD].z - 1.62 * 1.1).abs() < 1e-12);
    }

    #[test]
    fn placement_rotates_local_forward_onto_heading() {
        let pl = Placement::new(Vec2::new(1.0, 2.0), 0.0);
        let w = pl.to_world(Vec3::new(0.0, 1.0, 0.5));
        assert!((w.x - 2.0).abs() < 1e-12 && (w.y - 2.0).abs() < 1e-12 && w.z == 0.5);
        let w = pl.to_world(Vec3::new(1.0, 0.0, 0.0));
        assert!((w.x - 1.0).abs() < 1e-12 && (w.y - 1.0).abs() < 1e-12);
    }
}

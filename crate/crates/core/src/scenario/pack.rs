use super::body::{bend_posture, crouch_posture, lie_bed_posture, sit_posture, stand_posture, BodyShape, Placement};
use super::script::{ActivitySpan, FallKind, ScriptBuilder, ScriptedFall};
use crate::detector::LabeledScenario;
use crate::frame::REFERENCE_RATE_HZ;
use crate::geometry::{Vec2, Vec3};
use crate::pose::{PoseSequence, WorldPose};
use crate::thermal::CameraModel;

/// A scripted recording with its truth labels and the camera that watches it.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub poses: PoseSequence<WorldPose>,
    pub truth: LabeledScenario,
    pub falls: Vec<ScriptedFall>,
    pub spans: Vec<ActivitySpan>,
    pub camera: CameraModel,
}

impl Scenario {
    pub fn is_fall(&self) -> bool {
        !self.truth.falls.is_empty()
    }
}

pub const FALL_SCENARIOS: [&str; 5] = ["forward", "backward", "lateral", "slip", "trip"];
pub const NON_FALL_SCENARIOS: [&str; 5] = ["fast_sit", "pick_up", "lie_down", "crouch", "walk_out"];

/// Wall-mounted sensor 3.2 m from the room center.
pub fn default_camera() -> CameraModel {
    CameraModel::reference_sensor(Vec3::new(0.0, -3.2, 1.6), Vec3::new(0.0, 0.0, 0.8)).expect("fixed camera is valid")
}

fn builder(origin: Vec2, heading: f64) -> ScriptBuilder {
    ScriptBuilder::new(BodyShape::default(), REFERENCE_RATE_HZ, Placement::new(origin, heading))
}

fn scenario(name: &str, b: ScriptBuilder) -> Scenario {
    let (poses, truth, falls, spans) = b.finish();
    Scenario { name: name.to_string(), poses, truth, falls, spans, camera: default_camera() }
}

/// Builds one scripted scenario of the pack by name.
pub fn scenario_by_name(name: &str) -> Option<Scenario> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let shape = BodyShape::default();
    let b = match name {
        // falls are oriented across the line of sight so the body stays in view
        "forward" => {
            let mut b = builder(Vec2::new(-0.6, 0.0), 0.0);
            b.hold(3.0);
            b.fall(FallKind::Forward);
            b.hold(4.0);
            b
        }
        "backward" => {
            let mut b = builder(Vec2::new(0.6, 0.0), 0.0);
            b.hold(3.0);
            b.fall(FallKind::Backward);
            b.hold(4.0);
            b
        }
        "lateral" => {
            let mut b = builder(Vec2::new(-0.6, 0.2), FRAC_PI_2);
            b.hold(3.0);
            b.fall(FallKind::Lateral);
            b.hold(4.0);
            b
        }
        "slip" => {
            let mut b = builder(Vec2::new(0.2, 0.0), PI);
            b.hold(3.0);
            b.fall(FallKind::Slip);
            b.hold(4.0);
            b
        }
        "trip" => {
            let mut b = builder(Vec2::new(-1.8, 0.3), 0.0);
            b.hold(1.0);
            b.walk_to(Vec2::new(-0.8, 0.3));
            b.fall(FallKind::Trip);
            b.hold(4.0);
            b
        }
        "fast_sit" => {
            let mut b = builder(Vec2::new(0.0, 0.0), -0.3);
            b.hold(2.0);
            b.move_to("sit_down", sit_posture(&shape), 0.6);
            b.hold(3.0);
            b.move_to("stand_up", stand_posture(&shape), 1.0);
            b.hold(2.0);
            b
        }
        "pick_up" => {
            let mut b = builder(Vec2::new(0.3, 0.0), 0.4);
            b.hold(2.0);
            b.move_to("bend", bend_posture(&shape), 0.8);
            b.hold(1.0);
            b.move_to("straighten", stand_posture(&shape), 0.8);
            b.hold(2.0);
            b
        }
        "lie_down" => {
            let mut b = builder(Vec2::new(0.0, 0.3), -FRAC_PI_2);
            b.hold(2.0);
            b.move_to("sit_on_bed", sit_posture(&shape), 1.0);
            b.hold(1.0);
            b.move_to("lie_on_bed", lie_bed_posture(&shape), 1.5);
            b.hold(4.0);
            b
        }
        "crouch" => {
            let mut b = builder(Vec2::new(-0.3, 0.0), 1.2);
            b.hold(2.0);
            b.move_to("crouch", crouch_posture(&shape), 0.8);
            b.hold(2.0);
            b.move_to("rise", stand_posture(&shape), 0.8);
            b.hold(2.0);
            b
        }
        "walk_out" => {
            let mut b = builder(Vec2::new(0.0, 0.0), 0.0);
            b.hold(1.0);
            b.walk_to(Vec2::new(5.5, 0.5));
            b.hold(4.0);
            b
        }
        _ => return None,
    };
    Some(scenario(name, b))
}

/// The full pack: every fall variant followed by every fall-like non-fall.
pub fn scenario_pack() -> Vec<Scenario> {
    FALL_SCENARIOS
        .iter()
        .chain(NON_FALL_SCENARIOS.iter())
        .map(|n| scenario_by_name(n).expect("pack names are known"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pack_has_five_falls_and_five_non_falls() {
        let pack = scenario_pack();
        assert_eq!(pack.iter().filter(|s| s.is_fall()).count(), 5);
        assert_eq!(pack.iter().filter(|s| !s.is_fall()).count(), 5);
        for s in &pack {
            assert_eq!(s.truth.duration, s.poses.len() as f64 / 20.0);
        }
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(scenario_by_name("cartwheel").is_none());
    }

    #[test]
    fn walk_out_leaves_the_field_of_view() {
        let s = scenario_by_name("walk_out").unwrap();
        let last = s.poses.frames().last().unwrap();
        assert!(last.joints.iter().all(|&p| s.camera.project(p).is_none_or(|ip| !(0.0..=1.0).contains(&ip.u))));
    }
}

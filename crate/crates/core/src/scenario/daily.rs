//! Long randomized scripts of ordinary activity for false-alarm testing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::body::{bend_posture, crouch_posture, lie_bed_posture, sit_posture, stand_posture, BodyShape, Placement};
use super::script::{ActivitySpan, ScriptBuilder};
use crate::detector::LabeledScenario;
use crate::frame::{TemperatureFrame, REFERENCE_RATE_HZ};
use crate::geometry::Vec2;
use crate::pose::{PoseSequence, WorldPose};
use crate::thermal::{frame_seed, render_sequence, sample_virtual_camera, BodyThermalProfile, CameraBounds, CameraModel, SimParams, ThermalError};

#[derive(Debug, Clone, PartialEq)]
pub struct DailyParams {
    pub duration: f64,
    pub frame_rate: f64,
    /// A new random camera is drawn every this many seconds.
    pub camera_period: f64,
    /// Activities stay within this distance of the room center, except
    /// when the subject leaves the room.
    pub room_radius: f64,
    /// Distance from the room center of the spot the subject leaves to.
    pub away_radius: f64,
    pub camera_bounds: CameraBounds,
}

impl Default for DailyParams {
    fn default() -> Self {
        Self {
            duration: 3600.0,
            frame_rate: REFERENCE_RATE_HZ,
            camera_period: 300.0,
            room_radius: 1.5,
            away_radius: 7.0,
            camera_bounds: CameraBounds::default(),
        }
    }
}

/// Frames `[start_frame, end_frame)` are watched by `camera`.
#[derive(Debug, Clone)]
pub struct CameraBlock {
    pub start_frame: usize,
    pub end_frame: usize,
    pub camera: CameraModel,
}

#[derive(Debug, Clone)]
pub struct DailyScript {
    pub poses: PoseSequence<WorldPose>,
    pub truth: LabeledScenario,
    pub spans: Vec<ActivitySpan>,
    pub cameras: Vec<CameraBlock>,
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn point_in_disc(rng: &mut ChaCha8Rng, radius: f64) -> Vec2 {
    let r = radius * rng.random::<f64>().sqrt();
    let a = uniform(rng, 0.0, std::f64::consts::TAU);
    Vec2::new(r * a.cos(), r * a.sin())
}

/// Random sequence of standing, walking, sitting, bending, crouching, lying
/// in bed and leaving the room, with no falls. Deterministic per seed.
pub fn daily_activity(seed: u64, params: &DailyParams) -> Result<DailyScript, ThermalError> {
    if !(params.duration > 0.0 && params.frame_rate > 0.0 && params.camera_period > 0.0) {
        return Err(ThermalError::EmptyRange("daily script needs positive duration, rate and camera period".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = BodyShape { scale: uniform(&mut rng, 0.92, 1.08) };
    let start = Placement::new(point_in_disc(&mut rng, params.room_radius), uniform(&mut rng, 0.0, std::f64::consts::TAU));
    let mut b = ScriptBuilder::new(shape, params.frame_rate, start);
    let (stand, sit, bend, crouch, lie) =
        (stand_posture(&shape), sit_posture(&shape), bend_posture(&shape), crouch_posture(&shape), lie_bed_posture(&shape));

    while b.now() < params.duration {
        match rng.random_range(0..10u32) {
            0 | 1 => {
                b.hold(uniform(&mut rng, 3.0, 20.0));
            }
            2 | 3 => {
                let dest = point_in_disc(&mut rng, params.room_radius);
                b.walk_to(dest);
            }
            4 => {
                b.move_to("sit_down", sit, uniform(&mut rng, 0.6, 1.5));
                b.hold(uniform(&mut rng, 5.0, 40.0));
                b.move_to("stand_up", stand, uniform(&mut rng, 0.8, 1.5));
            }
            5 => {
                b.move_to("bend", bend, uniform(&mut rng, 0.6, 1.2));
                b.hold(uniform(&mut rng, 0.5, 2.0));
                b.move_to("straighten", stand, uniform(&mut rng, 0.6, 1.2));
            }
            6 => {
                b.move_to("crouch", crouch, uniform(&mut rng, 0.6, 1.2));
                b.hold(uniform(&mut rng, 1.0, 5.0));
                b.move_to("rise", stand, uniform(&mut rng, 0.6, 1.2));
            }
            7 => {
                b.move_to("sit_on_bed", sit, 1.0);
                b.hold(1.0);
                b.move_to("lie_on_bed", lie, uniform(&mut rng, 1.2, 2.0));
                b.hold(uniform(&mut rng, 20.0, 120.0));
                b.move_to("sit_up", sit, 1.5);
                b.hold(1.0);
                b.move_to("stand_up", stand, 1.0);
            }
            8 => {
                b.turn_to(uniform(&mut rng, 0.0, std::f64::consts::TAU), uniform(&mut rng, 0.4, 1.0));
            }
            _ => {
                let a = uniform(&mut rng, 0.0, std::f64::consts::TAU);
                b.walk_to(Vec2::new(params.away_radius * a.cos(), params.away_radius * a.sin()));
                b.hold_as("away", uniform(&mut rng, 20.0, 120.0));
                let back = point_in_disc(&mut rng, params.room_radius);
                b.walk_to(back);
            }
        }
    }

    let (poses, _, _, spans) = b.finish();
    let frames = ((params.duration * params.frame_rate).round() as usize).min(poses.len());
    let poses = poses.slice(0..frames);
    let block = ((params.camera_period * params.frame_rate).round() as usize).max(1);
    let cameras = (0..frames)
        .step_by(block)
        .enumerate()
        .map(|(i, start_frame)| {
            Ok(CameraBlock {
                start_frame,
                end_frame: (start_frame + block).min(frames),
                camera: sample_virtual_camera(frame_seed(seed, i), &params.camera_bounds)?,
            })
        })
        .collect::<Result<Vec<_>, ThermalError>>()?;
    let truth = LabeledScenario { falls: Vec::new(), duration: frames as f64 / params.frame_rate };
    Ok(DailyScript { poses, truth, spans, cameras })
}

/// Renders a daily script block by block with each block's camera. Frame
/// sequence numbers continue across blocks.
pub fn render_daily(
    script: &DailyScript,
    profile: &BodyThermalProfile,
    params: &SimParams,
) -> Result<Vec<TemperatureFrame>, ThermalError> {
    let mut out = Vec::with_capacity(script.poses.len());
    for (i, block) in script.cameras.iter().enumerate() {
        let block_params = SimParams {
            seed: frame_seed(params.seed ^ 0xD41_7A11, i),
            first_seq_no: params.first_seq_no.wrapping_add(block.start_frame as u32),
            ..params.clone()
        };
        let frames = &script.poses.frames()[block.start_frame..block.end_frame];
        out.extend(render_sequence(frames, &block.camera, profile, &block_params)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short() -> DailyParams {
        DailyParams { duration: 120.0, camera_period: 50.0, ..DailyParams::default() }
    }

    #[test]
    fn script_has_the_requested_length_and_no_falls() {
        let d = daily_activity(5, &short()).unwrap();
        assert_eq!(d.poses.len(), 2400);
        assert!(d.truth.falls.is_empty());
        assert_eq!(d.cameras.len(), 3);
        assert_eq!(d.cameras.last().unwrap().end_frame, 2400);
    }

    #[test]
    fn same_seed_same_script() {
        let a = daily_activity(9, &short()).unwrap();
        let b = daily_activity(9, &short()).unwrap();
        assert_eq!(a.poses, b.poses);
        assert_eq!(a.spans, b.spans);
    }

    #[test]
    fn cameras_change_between_blocks() {
        let d = daily_activity(1, &short()).unwrap();
        assert_ne!(d.cameras[0].camera.position(), d.cameras[1].camera.position());
    }
}

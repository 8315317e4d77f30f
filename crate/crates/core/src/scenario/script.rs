use serde::{Deserialize, Serialize};

use super::body::{lerp_posture, smoothstep, stand_posture, BodyShape, Placement, Posture};
use crate::detector::{LabeledScenario, TruthFall};
use crate::geometry::{Mat3, Vec2, Vec3};
use crate::pose::{joint, PoseSequence, SkeletonTopology, WorldPose};

/// Lowest height any joint may reach; keeps lying bodies on the floor.
pub const FLOOR_CLEARANCE: f64 = 0.02;

const STEP_LENGTH: f64 = 0.5;
const STEP_SECONDS: f64 = 0.5;
const SWING_FRACTION: f64 = 0.7;
const SWING_LIFT: f64 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallKind {
    Forward,
    Backward,
    Lateral,
    /// Feet slide forward while the body goes over backward.
    Slip,
    /// Forward fall with the body carried on by walking momentum.
    Trip,
}

impl FallKind {
    pub const ALL: [FallKind; 5] = [FallKind::Forward, FallKind::Backward, FallKind::Lateral, FallKind::Slip, FallKind::Trip];

    pub fn name(self) -> &'static str {
        match self {
            FallKind::Forward => "forward",
            FallKind::Backward => "backward",
            FallKind::Lateral => "lateral",
            FallKind::Slip => "slip",
            FallKind::Trip => "trip",
        }
    }
}

/// Rigid rotation of the whole body about a ground pivot, optionally with a
/// horizontal carry, in the body-local frame.
struct FallMotion {
    axis: Vec3,
    angle: f64,
    pivot: Vec3,
    carry: Vec3,
    seconds: f64,
}

impl FallMotion {
    fn of(kind: FallKind) -> Self {
        use std::f64::consts::FRAC_PI_2;
        let x = Vec3::new(1.0, 0.0, 0.0);
        match kind {
            FallKind::Forward => Self { axis: x, angle: -FRAC_PI_2, pivot: Vec3::new(0.0, 0.17, 0.0), carry: Vec3::ZERO, seconds: 0.9 },
            FallKind::Backward => Self { axis: x, angle: FRAC_PI_2, pivot: Vec3::new(0.0, -0.03, 0.0), carry: Vec3::ZERO, seconds: 0.9 },
            FallKind::Lateral => Self {
                axis: Vec3::new(0.0, 1.0, 0.0),
                angle: FRAC_PI_2,
                pivot: Vec3::new(0.13, 0.08, 0.0),
                carry: Vec3::ZERO,
                seconds: 0.9,
            },
            FallKind::Slip => Self {
                axis: x,
                angle: FRAC_PI_2,
                pivot: Vec3::new(0.0, -0.03, 0.0),
                carry: Vec3::new(0.0, 0.45, 0.0),
                seconds: 0.7,
            },
            FallKind::Trip => Self {
                axis: x,
                angle: -FRAC_PI_2,
                pivot: Vec3::new(0.0, 0.17, 0.0),
                carry: Vec3::new(0.0, 0.3, 0.0),
                seconds: 0.7,
            },
        }
    }

    /// Pose at progress `s` in [0, 1]; the rotation accelerates like a
    /// toppling body, so most of the drop happens late.
    fn at(&self, start: &Posture, s: f64) -> Posture {
        let rot = Mat3::axis_angle(self.axis, self.angle * s.powi(3));
        let carry = self.carry * smoothstep(s);
        std::array::from_fn(|i| {
            let mut p = self.pivot + rot.apply(start[i] - self.pivot) + carry;
            p.z = p.z.max(FLOOR_CLEARANCE);
            p
        })
    }
}

/// Labelled interval of a script, for logs and audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivitySpan {
    pub label: String,
    pub start: f64,
    pub end: f64,
}

/// Timing of one scripted fall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptedFall {
    pub kind: FallKind,
    /// Time of the last upright frame.
    pub onset: f64,
    /// Time the body comes to rest on the floor.
    pub impact: f64,
}

/// Builds a pose script one activity at a time at a fixed frame rate.
/// Frame `i` has timestamp `i / rate`.
#[derive(Debug, Clone)]
pub struct ScriptBuilder {
    shape: BodyShape,
    rate: f64,
    placement: Placement,
    posture: Posture,
    frames: Vec<WorldPose>,
    falls: Vec<ScriptedFall>,
    spans: Vec<ActivitySpan>,
}

impl ScriptBuilder {
    /// Starts standing at `placement`, with the first frame already emitted.
    pub fn new(shape: BodyShape, rate: f64, placement: Placement) -> Self {
        assert!(rate > 0.0 && rate.is_finite(), "frame rate must be positive");
        let posture = stand_posture(&shape);
        let mut b = Self { shape, rate, placement, posture, frames: Vec::new(), falls: Vec::new(), spans: Vec::new() };
        b.emit();
        b
    }

    pub fn shape(&self) -> &BodyShape {
        &self.shape
    }

    pub fn placement(&self) -> Placement {
        self.placement
    }

    pub fn posture(&self) -> &Posture {
        &self.posture
    }

    /// Timestamp of the last emitted frame.
    pub fn now(&self) -> f64 {
        (self.frames.len() - 1) as f64 / self.rate
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    fn frames_for(&self, seconds: f64) -> usize {
        (seconds * self.rate).round().max(0.0) as usize
    }

    fn emit(&mut self) {
        let t = self.frames.len() as f64 / self.rate;
        self.frames.push(self.placement.pose(&self.posture, t));
    }

    fn span(&mut self, label: &str, start: f64) {
        let end = self.now();
        self.spans.push(ActivitySpan { label: label.to_string(), start, end });
    }

    pub fn hold(&mut self, seconds: f64) -> &mut Self {
        self.hold_as("hold", seconds)
    }

    /// Keeps the current posture for `seconds`, labelled `label`.
    pub fn hold_as(&mut self, label: &str, seconds: f64) -> &mut Self {
        let start = self.now();
        for _ in 0..self.frames_for(seconds) {
            self.emit();
        }
        self.span(label, start);
        self
    }

    /// Smooth joint-space transition into `target`, labelled `label`.
    pub fn move_to(&mut self, label: &str, target: Posture, seconds: f64) -> &mut Self {
        let start = self.now();
        let from = self.posture;
        let n = self.frames_for(seconds).max(1);
        for k in 1..=n {
            self.posture = lerp_posture(&from, &target, smoothstep(k as f64 / n as f64));
            self.emit();
        }
        self.posture = target;
        self.span(label, start);
        self
    }

    /// Turns in place toward `heading` along the shorter direction.
    pub fn turn_to(&mut self, heading: f64, seconds: f64) -> &mut Self {
        use std::f64::consts::{PI, TAU};
        let from = self.placement.heading;
        let delta = (heading - from + PI).rem_euclid(TAU) - PI;
        if delta.abs() < 1e-9 {
            return self;
        }
        let start = self.now();
        let n = self.frames_for(seconds).max(1);
        for k in 1..=n {
            self.placement.heading = from + delta * smoothstep(k as f64 / n as f64);
            self.emit();
        }
        self.placement.heading = from + delta;
        self.span("turn", start);
        self
    }

    /// Walks to the world point `dest` with alternating steps, ending upright
    /// facing the walking direction. Assumes a standing start.
    pub fn walk_to(&mut self, dest: Vec2) -> &mut Self {
        let delta = dest - self.placement.origin;
        let distance = delta.norm();
        if distance < 0.05 {
            return self;
        }
        self.turn_to(delta.y.atan2(delta.x), 0.4);
        let start = self.now();
        let stand = stand_posture(&self.shape);
        let steps = (distance / STEP_LENGTH).ceil() as usize;
        let step = distance / steps as f64;
        let step_frames = self.frames_for(STEP_SECONDS).max(2);
        let swing_frames = ((step_frames as f64 * SWING_FRACTION).round() as usize).clamp(1, step_frames);
        let mut feet = [0.0f64, 0.0f64];
        for k in 0..=steps {
            let side = k % 2;
            let from = feet[side];
            let to = (k + 1).min(steps) as f64 * step;
            for f in 1..=step_frames {
                let phase = (f as f64 / swing_frames as f64).min(1.0);
                feet[side] = from + (to - from) * smoothstep(phase);
                let lift = if f < swing_frames { SWING_LIFT * (std::f64::consts::PI * phase).sin() } else { 0.0 };
                self.posture = gait_posture(&stand, feet, side, lift);
                self.emit();
            }
            feet[side] = to;
        }
        self.placement.origin = self.placement.to_world(Vec3::new(0.0, distance, 0.0)).horizontal();
        self.posture = stand;
        self.emit();
        self.span("walk", start);
        self
    }

    /// Falls from the current posture and returns the fall's timing. The body
    /// stays where it lands.
    pub fn fall(&mut self, kind: FallKind) -> ScriptedFall {
        let onset = self.now();
        let motion = FallMotion::of(kind);
        let from = self.posture;
        let n = self.frames_for(motion.seconds).max(2);
        for k in 1..=n {
            self.posture = motion.at(&from, k as f64 / n as f64);
            self.emit();
        }
        let fall = ScriptedFall { kind, onset, impact: self.now() };
        self.falls.push(fall);
        self.span(&format!("fall_{}", kind.name()), onset);
        fall
    }

    pub fn spans(&self) -> &[ActivitySpan] {
        &self.spans
    }

    pub fn falls(&self) -> &[ScriptedFall] {
        &self.falls
    }

    /// The pose sequence plus truth intervals; each fall's interval runs from
    /// its onset to the end of the script.
    pub fn finish(self) -> (PoseSequence<WorldPose>, LabeledScenario, Vec<ScriptedFall>, Vec<ActivitySpan>) {
        let duration = self.frames.len() as f64 / self.rate;
        let end = self.now();
        let truth = LabeledScenario {
            falls: self.falls.iter().map(|f| TruthFall { start: f.onset, end, impact: Some(f.impact) }).collect(),
            duration,
        };
        let seq = PoseSequence::new(SkeletonTopology::default_17(), self.frames, self.rate)
            .expect("builder emits valid monotone frames");
        (seq, truth, self.falls, self.spans)
    }
}

/// Standing posture translated forward to the midpoint of the feet, with the
/// two feet placed independently. `feet` are forward offsets of the left and
/// right foot; the `swing` side is raised by `lift`.
fn gait_posture(stand: &Posture, feet: [f64; 2], swing: usize, lift: f64) -> Posture {
    let body = 0.5 * (feet[0] + feet[1]);
    let mut p: Posture = std::array::from_fn(|i| stand[i] + Vec3::new(0.0, body, 0.0));
    let legs = [(joint::L_KNEE, joint::L_ANKLE, joint::L_FOOT), (joint::R_KNEE, joint::R_ANKLE, joint::R_FOOT)];
    for (side, &(knee, ankle, foot)) in legs.iter().enumerate() {
        let raise = if side == swing { lift } else { 0.0 };
        p[ankle] = stand[ankle] + Vec3::new(0.0, feet[side], raise);
        p[foot] = stand[foot] + Vec3::new(0.0, feet[side], raise);
        p[knee] = stand[knee] + Vec3::new(0.0, 0.5 * (body + feet[side]), 0.5 * raise);
    }
    p
}

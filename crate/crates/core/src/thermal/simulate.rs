use super::{blur_and_noise, render_frame, BlurParams, BodyThermalProfile, CameraModel, HotObject, ThermalError};
use crate::balance::{
    segment_states, smob_trajectory, AnthropometricTable, BalanceStateSequence, SegmentationParams, SmobTrajectory,
    DEFAULT_CONTACT_EPSILON,
};
use crate::frame::TemperatureFrame;
use crate::pose::{Pose25D, PoseSequence, WorldPose};

#[derive(Debug, Clone)]
pub struct SimParams {
    pub hot_objects: Vec<HotObject>,
    pub blur: BlurParams,
    pub seed: u64,
    pub table: AnthropometricTable,
    pub contact_epsilon: f64,
    pub segmentation: SegmentationParams,
    /// Sequence number of the first frame.
    pub first_seq_no: u32,
    /// Worker threads for rendering; `None` uses the available parallelism.
    pub threads: Option<usize>,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            hot_objects: Vec::new(),
            blur: BlurParams::default(),
            seed: 0,
            table: AnthropometricTable::default_table(),
            contact_epsilon: DEFAULT_CONTACT_EPSILON,
            segmentation: SegmentationParams::default(),
            first_seq_no: 0,
            threads: None,
        }
    }
}

/// Labels computed from the script itself, aligned with the frames.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub poses_25d: PoseSequence<Pose25D>,
    pub smob: SmobTrajectory,
    pub states: BalanceStateSequence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub frames: Vec<TemperatureFrame>,
    pub truth: GroundTruth,
}

/// Noise seed of frame `index`: independent streams per frame so frames can
/// render in any order.
pub fn frame_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn render_one(
    frames: &[WorldPose],
    i: usize,
    camera: &CameraModel,
    profile: &BodyThermalProfile,
    params: &SimParams,
) -> Result<TemperatureFrame, ThermalError> {
    let cur = &frames[i];
    let prev = if i == 0 { cur } else { &frames[i - 1] };
    let scene = render_frame(cur, profile, camera, &params.hot_objects);
    let mut frame = blur_and_noise(&scene, prev, cur, camera, profile, &params.blur, frame_seed(params.seed, i))?;
    frame.seq_no = params.first_seq_no.wrapping_add(i as u32);
    Ok(frame)
}

/// Renders, blurs and quantizes every pose; rendering fans out over threads
/// and the output order is by sequence number regardless of scheduling.
pub fn render_sequence(
    frames: &[WorldPose],
    camera: &CameraModel,
    profile: &BodyThermalProfile,
    params: &SimParams,
) -> Result<Vec<TemperatureFrame>, ThermalError> {
    let threads = params
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .clamp(1, 64);
    if threads == 1 || frames.len() < 64 {
        return (0..frames.len()).map(|i| render_one(frames, i, camera, profile, params)).collect();
    }
    let chunk = frames.len().div_ceil(threads);
    let results: Vec<Result<Vec<TemperatureFrame>, ThermalError>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..frames.len())
            .step_by(chunk)
            .map(|start| {
                let end = (start + chunk).min(frames.len());
                s.spawn(move || (start..end).map(|i| render_one(frames, i, camera, profile, params)).collect())
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("render worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(frames.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// Thermal frames for a scripted pose sequence plus the balance ground
/// truth of the same script.
pub fn simulate_sequence(
    script: &PoseSequence<WorldPose>,
    camera: &CameraModel,
    profile: &BodyThermalProfile,
    params: &SimParams,
) -> Result<Simulation, ThermalError> {
    let frames = render_sequence(script.frames(), camera, profile, params)?;
    let poses_25d = PoseSequence::new(
        script.topology().clone(),
        script.frames().iter().map(|p| camera.project_pose(p)).collect(),
        script.frame_rate(),
    )?;
    let smob = smob_trajectory(script, &params.table, params.contact_epsilon)?;
    let states = segment_states(&smob, script, &params.segmentation)?;
    Ok(Simulation { frames, truth: GroundTruth { poses_25d, smob, states } })
}

//! The per-sensor processing chain: presence, motion history, pose
//! provider, fall detector.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::detector::{DetectionOutput, DetectorConfig, DetectorError, FallDetector, FallEvent, WindowRecord};
use crate::frame::TemperatureFrame;
use crate::motion::{
    detect_presence, estimate_ambient, mask_frame, MhiParams, MhiTracker, MotionError, MotionHistoryImage,
    PresenceDetection, PresenceParams,
};
use crate::pose::{PoseSequence, SkeletonTopology, WorldPose};

/// Supplies the world pose for a frame. A learned estimator would produce
/// it from the frame within the frame period; the reference provider looks
/// it up from the script that generated the frames.
pub trait PoseProvider: Send {
    /// The pose at `frame`'s timestamp, or `None` if there is none.
    fn pose(&mut self, sensor_id: u16, frame: &TemperatureFrame) -> Option<WorldPose>;
}

/// Replays scripted poses by frame sequence number.
#[derive(Debug, Clone, Default)]
pub struct ReplayPoseProvider {
    poses: HashMap<u32, WorldPose>,
}

impl ReplayPoseProvider {
    /// Pose `i` of `seq` belongs to sequence number `first_seq_no + i`.
    pub fn new(seq: &PoseSequence<WorldPose>, first_seq_no: u32) -> Self {
        let poses = seq.frames().iter().enumerate().map(|(i, p)| (first_seq_no.wrapping_add(i as u32), p.clone())).collect();
        Self { poses }
    }
}

impl PoseProvider for ReplayPoseProvider {
    fn pose(&mut self, _sensor_id: u16, frame: &TemperatureFrame) -> Option<WorldPose> {
        self.poses.get(&frame.seq_no).cloned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub detector: DetectorConfig,
    pub mhi: MhiParams,
    pub presence: PresenceParams,
    /// Room temperature, °C; estimated per frame when unset.
    pub ambient: Option<f64>,
    /// Pixels kept around the presence box when masking.
    pub mask_margin: usize,
    /// Frames buffered per sensor before the oldest are dropped.
    pub queue_capacity: usize,
    /// Packets held back to restore sequence order.
    pub reorder_window: usize,
    /// How long shutdown may spend draining queues, milliseconds.
    pub shutdown_deadline_ms: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            detector: DetectorConfig::default(),
            mhi: MhiParams::default(),
            presence: PresenceParams::default(),
            ambient: None,
            mask_margin: 2,
            queue_capacity: 64,
            reorder_window: 8,
            shutdown_deadline_ms: 2000,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Motion(#[from] MotionError),
}

/// One frame's intermediate results.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutcome {
    pub presence: Option<PresenceDetection>,
    pub had_pose: bool,
    pub events: Vec<FallEvent>,
}

pub struct SensorPipeline {
    sensor_id: u16,
    config: PipelineConfig,
    mhi: MhiTracker,
    detector: FallDetector,
    provider: Box<dyn PoseProvider>,
}

impl SensorPipeline {
    pub fn new(
        sensor_id: u16,
        config: PipelineConfig,
        topology: &SkeletonTopology,
        provider: Box<dyn PoseProvider>,
    ) -> Result<Self, PipelineError> {
        Ok(Self {
            sensor_id,
            config,
            mhi: MhiTracker::new(config.mhi)?,
            detector: FallDetector::new(config.detector, topology)?,
            provider,
        })
    }

    pub fn sensor_id(&self) -> u16 {
        self.sensor_id
    }

    pub fn mhi(&self) -> Option<&MotionHistoryImage> {
        self.mhi.current()
    }

    pub fn take_windows(&mut self) -> Vec<WindowRecord> {
        self.detector.take_windows()
    }

    /// Runs one frame through presence, motion history, pose lookup and the
    /// detector. Frames without a pose skip the detector.
    pub fn process(&mut self, frame: &TemperatureFrame) -> Result<FrameOutcome, PipelineError> {
        let ambient = self.config.ambient.unwrap_or_else(|| estimate_ambient(frame));
        let presence = detect_presence(frame, ambient, &self.config.presence);
        match &presence {
            Some(det) => self.mhi.push(&mask_frame(frame, det, self.config.mask_margin, ambient)?)?,
            None => self.mhi.push(frame)?,
        };
        let pose = self.provider.pose(self.sensor_id, frame);
        let events = match &pose {
            Some(p) => self.detector.push(p, presence.map_or(0.0, |d| d.confidence))?,
            None => Vec::new(),
        };
        Ok(FrameOutcome { presence, had_pose: pose.is_some(), events })
    }

    /// Ends the stream; see [`FallDetector::finish`].
    pub fn finish(&mut self) -> Vec<FallEvent> {
        self.detector.finish()
    }
}

/// Offline run of the live pipeline over recorded frames.
pub fn run_pipeline(
    frames: &[TemperatureFrame],
    sensor_id: u16,
    config: &PipelineConfig,
    topology: &SkeletonTopology,
    provider: Box<dyn PoseProvider>,
) -> Result<(DetectionOutput, Vec<Option<PresenceDetection>>), PipelineError> {
    let mut p = SensorPipeline::new(sensor_id, *config, topology, provider)?;
    let mut events = Vec::new();
    let mut windows = Vec::new();
    let mut presences = Vec::with_capacity(frames.len());
    for f in frames {
        let out = p.process(f)?;
        presences.push(out.presence);
        events.extend(out.events);
        windows.extend(p.take_windows());
    }
    events.extend(p.finish());
    windows.extend(p.take_windows());
    Ok((DetectionOutput { events, windows }, presences))
}

/// Presence detections for each frame with the pipeline's settings.
pub fn presence_series(frames: &[TemperatureFrame], config: &PipelineConfig) -> Vec<Option<PresenceDetection>> {
    frames
        .iter()
        .map(|f| detect_presence(f, config.ambient.unwrap_or_else(|| estimate_ambient(f)), &config.presence))
        .collect()
}

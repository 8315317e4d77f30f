//! Sliding-window fall detection over balance trajectories, gated by
//! presence, with event merging and DR / FAR evaluation.

mod eval;
mod online;
mod score;

pub use eval::{evaluate, evaluate_with_windows, FallMatch, read_events, read_truth, write_events, write_windows, DetectionReport, LabeledScenario, TruthFall};
pub use online::{detect_poses, detect_stream, detect_stream_logged, DetectionOutput, FallDetector, FallEvent, WindowRecord};
pub use score::{fall_probability, summarize, FallScorer, FrameSummary, LogisticScorer, ScoreWeights, WindowFeatures};

use serde::{Deserialize, Serialize};

use crate::balance::{BalanceError, SegmentationParams, DEFAULT_CONTACT_EPSILON};
use crate::pose::PoseError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Frames per scoring window.
    pub window_len: usize,
    /// Frames between window starts.
    pub stride: usize,
    pub p_fall_threshold: f64,
    pub presence_threshold: f64,
    pub lob_persistence: usize,
    /// Pelvis height (m) below which a frame counts as ground impact.
    pub gis_height: f64,
    pub score_weights: ScoreWeights,
    pub contact_epsilon: f64,
    /// Seconds of slack when matching events to true falls.
    pub match_tolerance: f64,
    /// Count windows without a confident presence in the FAR denominator.
    pub include_absent_windows: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            window_len: 40,
            stride: 10,
            p_fall_threshold: 0.95,
            presence_threshold: 0.5,
            lob_persistence: 2,
            gis_height: 0.35,
            score_weights: ScoreWeights::default(),
            contact_epsilon: DEFAULT_CONTACT_EPSILON,
            match_tolerance: 1.0,
            include_absent_windows: false,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), DetectorError> {
        let bad = |m: String| Err(DetectorError::InvalidConfig(m));
        if self.window_len == 0 || self.stride == 0 || self.stride > self.window_len {
            return bad(format!("need 0 < stride ({}) <= window_len ({})", self.stride, self.window_len));
        }
        for (name, v) in [("p_fall_threshold", self.p_fall_threshold), ("presence_threshold", self.presence_threshold)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} must lie in [0, 1]"));
            }
        }
        if !(self.gis_height.is_finite() && self.contact_epsilon.is_finite() && self.contact_epsilon >= 0.0) {
            return bad("gis_height and contact_epsilon must be finite".into());
        }
        if !(self.match_tolerance >= 0.0 && self.match_tolerance.is_finite()) {
            return bad(format!("match_tolerance = {} must be non-negative", self.match_tolerance));
        }
        self.score_weights.validate()
    }

    pub fn segmentation(&self) -> SegmentationParams {
        SegmentationParams { lob_persistence: self.lob_persistence, gis_height: self.gis_height }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DetectorError {
    #[error("invalid detector config: {0}")]
    InvalidConfig(String),
    #[error("window has {len} frames, {need} required")]
    WindowTooShort { len: usize, need: usize },
    #[error("{poses} pose frames but {presences} presence entries")]
    Misaligned { poses: usize, presences: usize },
    #[error("frame at t = {t} does not follow t = {prev}")]
    NonMonotone { prev: f64, t: f64 },
    #[error(transparent)]
    Balance(#[from] BalanceError),
    #[error(transparent)]
    Pose(#[from] PoseError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

use serde::{Deserialize, Serialize};

use super::{DetectorConfig, DetectorError};
use crate::balance::{FrameBalance, SmobSample};
use crate::motion::sigmoid;
use crate::pose::{joint, WorldPose};

/// Margin deficit (m) that saturates the deficit feature.
pub const DEFICIT_SCALE: f64 = 0.3;
/// Downward CoM speed (m/s) that saturates the descent feature.
pub const DESCENT_SCALE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreWeights {
    pub w_deficit: f64,
    pub w_duration: f64,
    pub w_descent: f64,
    pub bias: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self { w_deficit: 4.0, w_duration: 3.0, w_descent: 2.0, bias: 4.0 }
    }
}

impl ScoreWeights {
    pub fn validate(&self) -> Result<(), DetectorError> {
        let w = [self.w_deficit, self.w_duration, self.w_descent];
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || !self.bias.is_finite() {
            return Err(DetectorError::InvalidConfig(format!("score weights {self:?} must be finite, weights >= 0")));
        }
        Ok(())
    }
}

/// What the detector keeps of each frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSummary {
    pub t: f64,
    pub smob: Option<f64>,
    pub com_z: f64,
    /// Vertical CoM speed from the previous frame, m/s; 0 on the first.
    pub vz: f64,
    pub descending: bool,
    pub pelvis_z: f64,
}

impl FrameSummary {
    pub fn balance(&self) -> FrameBalance {
        FrameBalance { smob: self.smob, descending: self.descending, pelvis_height: self.pelvis_z }
    }

    pub fn unstable(&self) -> bool {
        self.balance().unstable()
    }
}

/// Frame summaries for aligned samples and poses; `pelvis` is the pelvis
/// joint index.
pub fn summarize(samples: &[SmobSample], poses: &[WorldPose], pelvis: usize) -> Vec<FrameSummary> {
    let mut out: Vec<FrameSummary> = Vec::with_capacity(samples.len());
    for (s, p) in samples.iter().zip(poses) {
        let vz = match out.last() {
            Some(prev) if s.t > prev.t => (s.com.z - prev.com_z) / (s.t - prev.t),
            _ => 0.0,
        };
        out.push(FrameSummary {
            t: s.t,
            smob: s.smob,
            com_z: s.com.z,
            vz,
            descending: vz < -crate::balance::DESCENT_SPEED_EPS,
            pelvis_z: p.joints.get(pelvis).map_or(f64::INFINITY, |j| j.z),
        });
    }
    out
}

/// Normalized window features, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WindowFeatures {
    pub deficit: f64,
    pub duration: f64,
    pub descent: f64,
}

impl WindowFeatures {
    pub fn of(window: &[FrameSummary]) -> Self {
        if window.is_empty() {
            return Self::default();
        }
        let min_smob = window.iter().filter_map(|f| f.smob).fold(f64::INFINITY, f64::min);
        let deficit = if min_smob.is_finite() { (-min_smob).max(0.0) / DEFICIT_SCALE } else { 0.0 };
        let unstable = window.iter().filter(|f| f.unstable()).count();
        let min_vz = window.iter().map(|f| f.vz).fold(f64::INFINITY, f64::min);
        Self {
            deficit: deficit.min(1.0),
            duration: unstable as f64 / window.len() as f64,
            descent: ((-min_vz).max(0.0) / DESCENT_SCALE).min(1.0),
        }
    }
}

/// Maps a window of frames to a fall probability.
pub trait FallScorer {
    fn probability(&self, window: &[FrameSummary]) -> f64;
}

/// `σ(w1 f_deficit + w2 f_duration + w3 f_descent - b)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LogisticScorer {
    pub weights: ScoreWeights,
}

impl LogisticScorer {
    pub fn new(weights: ScoreWeights) -> Self {
        Self { weights }
    }

    pub fn score_features(&self, f: &WindowFeatures) -> f64 {
        let w = &self.weights;
        sigmoid(w.w_deficit * f.deficit + w.w_duration * f.duration + w.w_descent * f.descent - w.bias)
    }
}

impl FallScorer for LogisticScorer {
    fn probability(&self, window: &[FrameSummary]) -> f64 {
        self.score_features(&WindowFeatures::of(window))
    }
}

/// Fall probability of one window of samples with aligned poses of the
/// default skeleton.
pub fn fall_probability(samples: &[SmobSample], poses: &[WorldPose], config: &DetectorConfig) -> Result<f64, DetectorError> {
    let len = samples.len().min(poses.len());
    if len < config.window_len {
        return Err(DetectorError::WindowTooShort { len, need: config.window_len });
    }
    let summary = summarize(&samples[..config.window_len], &poses[..config.window_len], joint::PELVIS);
    Ok(LogisticScorer::new(config.score_weights).probability(&summary))
}

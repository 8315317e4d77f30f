use serde::{Deserialize, Serialize};

use super::score::FrameSummary;
use super::{DetectorConfig, DetectorError, FallScorer, LogisticScorer, WindowFeatures};
use crate::balance::{label_frames, AnthropometricTable, BalanceState, FrameBalance, SmobSample, DESCENT_SPEED_EPS};
use crate::motion::PresenceDetection;
use crate::pose::{PoseSequence, SkeletonTopology, WorldPose};

/// Frames of continuous descent needed to call a fall whose impact was
/// never observed.
const TRUNCATION_DESCENT_FRAMES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FallEvent {
    /// Start of the loss-of-balance run, seconds.
    pub t_onset: f64,
    /// First ground-impact frame; absent when the data ended first.
    pub t_impact: Option<f64>,
    /// Depth of the most negative margin in the event span, meters.
    pub peak_deficit: f64,
    pub confidence: f64,
    /// Time span covered by the merged firing windows at emission.
    pub span_start: f64,
    pub span_end: f64,
    /// The firing window that confirmed the event.
    pub window_start: f64,
    pub window_end: f64,
}

impl FallEvent {
    /// Impact time, or onset when impact was not observed.
    pub fn reference_time(&self) -> f64 {
        self.t_impact.unwrap_or(self.t_onset)
    }
}

/// One scored window, for audit logs and FAR accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub index: usize,
    pub start_frame: usize,
    pub end_frame: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub probability: f64,
    pub features: WindowFeatures,
    /// Frames with presence confidence at or above the threshold.
    pub present_frames: usize,
    /// Fewer than a majority of frames had a confident presence.
    pub gated: bool,
    pub fired: bool,
}

#[derive(Debug, Clone)]
struct Candidate {
    start: usize,
    end: usize,
    max_p: f64,
    /// Most recent firing window, `[start, end)`.
    last: (usize, usize),
}

/// Online detector for one stream. Frames go in one at a time; windows are
/// scored as soon as their last frame arrives, so feeding a recording frame
/// by frame and in one call give the same events.
#[derive(Debug, Clone)]
pub struct FallDetector<S = LogisticScorer> {
    config: DetectorConfig,
    scorer: S,
    table: AnthropometricTable,
    contacts: Vec<usize>,
    pelvis: usize,
    base: usize,
    buf: Vec<FrameSummary>,
    present: Vec<bool>,
    pushed: usize,
    next_window: usize,
    candidate: Option<Candidate>,
    /// Impact frame of the latest event; a fall pattern is only reported
    /// once, so later searches start after it.
    last_impact: Option<usize>,
    log: Vec<WindowRecord>,
}

impl FallDetector<LogisticScorer> {
    pub fn new(config: DetectorConfig, topology: &SkeletonTopology) -> Result<Self, DetectorError> {
        Self::with_scorer(config, topology, LogisticScorer::new(config.score_weights))
    }
}

impl<S: FallScorer> FallDetector<S> {
    pub fn with_scorer(config: DetectorConfig, topology: &SkeletonTopology, scorer: S) -> Result<Self, DetectorError> {
        config.validate()?;
        Ok(Self {
            config,
            scorer,
            table: AnthropometricTable::default_table(),
            contacts: topology.contact_joints(),
            pelvis: topology.index_of("pelvis")?,
            base: 0,
            buf: Vec::new(),
            present: Vec::new(),
            pushed: 0,
            next_window: 0,
            candidate: None,
            last_impact: None,
            log: Vec::new(),
        })
    }

    pub fn with_table(mut self, table: AnthropometricTable) -> Self {
        self.table = table;
        self
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn frames_seen(&self) -> usize {
        self.pushed
    }

    /// Drains the records of windows scored since the last call.
    pub fn take_windows(&mut self) -> Vec<WindowRecord> {
        std::mem::take(&mut self.log)
    }

    /// Adds one frame with its presence confidence (0 when nobody was
    /// found) and returns any events confirmed by it.
    pub fn push(&mut self, pose: &WorldPose, presence: f64) -> Result<Vec<FallEvent>, DetectorError> {
        let sample = SmobSample::from_pose(pose, &self.table, &self.contacts, self.config.contact_epsilon)?;
        let prev = self.buf.last();
        if let Some(p) = prev {
            if sample.t.partial_cmp(&p.t) != Some(std::cmp::Ordering::Greater) {
                return Err(DetectorError::NonMonotone { prev: p.t, t: sample.t });
            }
        }
        let vz = prev.map_or(0.0, |p| (sample.com.z - p.com_z) / (sample.t - p.t));
        self.buf.push(FrameSummary {
            t: sample.t,
            smob: sample.smob,
            com_z: sample.com.z,
            vz,
            descending: vz < -DESCENT_SPEED_EPS,
            pelvis_z: pose.joints.get(self.pelvis).map_or(f64::INFINITY, |j| j.z),
        });
        self.present.push(presence >= self.config.presence_threshold);
        self.pushed += 1;

        let mut events = Vec::new();
        while self.next_window * self.config.stride + self.config.window_len <= self.pushed {
            if let Some(e) = self.score_window(self.next_window) {
                events.push(e);
            }
            self.next_window += 1;
        }
        self.trim();
        Ok(events)
    }

    /// Ends the stream. A candidate still waiting for its impact becomes an
    /// event if it ends in loss of balance with the body still descending.
    pub fn finish(&mut self) -> Vec<FallEvent> {
        let Some(cand) = self.candidate.take() else { return Vec::new() };
        let lo = self.search_start(&cand);
        if lo >= self.pushed {
            return Vec::new();
        }
        let labels = self.labels(lo, self.pushed);
        if labels.last() != Some(&BalanceState::LossOfBalance) {
            return Vec::new();
        }
        let tail = &self.buf[self.buf.len().saturating_sub(TRUNCATION_DESCENT_FRAMES)..];
        if tail.len() < TRUNCATION_DESCENT_FRAMES || !tail.iter().all(|f| f.descending) {
            return Vec::new();
        }
        let run_start = labels.iter().rposition(|l| *l != BalanceState::LossOfBalance).map_or(0, |i| i + 1);
        vec![self.event(&cand, lo + run_start, None)]
    }

    fn at(&self, frame: usize) -> &FrameSummary {
        &self.buf[frame - self.base]
    }

    fn search_start(&self, cand: &Candidate) -> usize {
        let lo = cand.start.saturating_sub(self.config.window_len).max(self.base);
        self.last_impact.map_or(lo, |i| lo.max(i + 1))
    }

    fn labels(&self, lo: usize, hi: usize) -> Vec<BalanceState> {
        let frames: Vec<FrameBalance> = self.buf[lo - self.base..hi - self.base].iter().map(|f| f.balance()).collect();
        label_frames(&frames, &self.config.segmentation())
    }

    fn score_window(&mut self, index: usize) -> Option<FallEvent> {
        let (s, e) = (index * self.config.stride, index * self.config.stride + self.config.window_len);
        let window = &self.buf[s - self.base..e - self.base];
        let probability = self.scorer.probability(window);
        let features = WindowFeatures::of(window);
        let present_frames = self.present[s - self.base..e - self.base].iter().filter(|&&p| p).count();
        let gated = present_frames * 2 <= self.config.window_len;
        let fired = !gated && probability >= self.config.p_fall_threshold;
        self.log.push(WindowRecord {
            index,
            start_frame: s,
            end_frame: e,
            t_start: self.at(s).t,
            t_end: self.at(e - 1).t,
            probability,
            features,
            present_frames,
            gated,
            fired,
        });

        if !fired {
            if self.candidate.as_ref().is_some_and(|c| s >= c.end) {
                self.candidate = None;
            }
            return None;
        }
        match &mut self.candidate {
            Some(c) if s < c.end => {
                c.end = c.end.max(e);
                c.max_p = c.max_p.max(probability);
                c.last = (s, e);
            }
            _ => self.candidate = Some(Candidate { start: s, end: e, max_p: probability, last: (s, e) }),
        }
        let cand = self.candidate.clone().expect("set above");
        let lo = self.search_start(&cand);
        if lo >= cand.end {
            return None;
        }
        let labels = self.labels(lo, self.pushed);
        let (onset, impact) = find_fall(&labels, cand.start.saturating_sub(lo), cand.end - lo)?;
        self.last_impact = Some(lo + impact);
        Some(self.event(&cand, lo + onset, Some(lo + impact)))
    }

    fn event(&self, cand: &Candidate, onset: usize, impact: Option<usize>) -> FallEvent {
        let end = cand.end.min(self.pushed);
        let min_smob = (cand.start..end).filter_map(|i| self.at(i).smob).fold(f64::INFINITY, f64::min);
        FallEvent {
            t_onset: self.at(onset).t,
            t_impact: impact.map(|i| self.at(i).t),
            peak_deficit: if min_smob.is_finite() { (-min_smob).max(0.0) } else { 0.0 },
            confidence: cand.max_p,
            span_start: self.at(cand.start).t,
            span_end: self.at(end - 1).t,
            window_start: self.at(cand.last.0).t,
            window_end: self.at(cand.last.1 - 1).t,
        }
    }

    /// Keeps the frames later windows and label context can still reach.
    fn trim(&mut self) {
        let next_start = self.next_window * self.config.stride;
        let keep_from = self.candidate.as_ref().map_or(next_start, |c| c.start.min(next_start));
        let keep_from = keep_from.saturating_sub(self.config.window_len).max(self.base);
        let drop = keep_from - self.base;
        if drop > 4 * self.config.window_len {
            self.buf.drain(..drop);
            self.present.drain(..drop);
            self.base = keep_from;
        }
    }
}

/// First ground-impact frame in `[lo, hi)` preceded by a loss-of-balance
/// run with no stable frame in between. Returns (run start, impact).
fn find_fall(labels: &[BalanceState], lo: usize, hi: usize) -> Option<(usize, usize)> {
    let mut run: Option<usize> = None;
    for (i, l) in labels.iter().enumerate().take(hi.min(labels.len())) {
        match l {
            BalanceState::LossOfBalance => {
                run.get_or_insert(i);
            }
            BalanceState::StableBalance => run = None,
            BalanceState::GroundImpact => {
                if let Some(s) = run {
                    if i >= lo {
                        return Some((s, i));
                    }
                }
            }
            BalanceState::Undefined => {}
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionOutput {
    pub events: Vec<FallEvent>,
    pub windows: Vec<WindowRecord>,
}

/// Events plus the full window log for a recorded stream.
pub fn detect_stream_logged(
    poses: &PoseSequence<WorldPose>,
    presences: &[Option<PresenceDetection>],
    config: &DetectorConfig,
) -> Result<DetectionOutput, DetectorError> {
    if poses.len() != presences.len() {
        return Err(DetectorError::Misaligned { poses: poses.len(), presences: presences.len() });
    }
    let mut det = FallDetector::new(*config, poses.topology())?;
    let mut events = Vec::new();
    let mut windows = Vec::new();
    for (pose, presence) in poses.frames().iter().zip(presences) {
        events.extend(det.push(pose, presence.map_or(0.0, |d| d.confidence))?);
        windows.extend(det.take_windows());
    }
    events.extend(det.finish());
    Ok(DetectionOutput { events, windows })
}

pub fn detect_stream(
    poses: &PoseSequence<WorldPose>,
    presences: &[Option<PresenceDetection>],
    config: &DetectorConfig,
) -> Result<Vec<FallEvent>, DetectorError> {
    Ok(detect_stream_logged(poses, presences, config)?.events)
}

/// Detection on poses alone, treating the subject as present throughout.
pub fn detect_poses(poses: &PoseSequence<WorldPose>, config: &DetectorConfig) -> Result<DetectionOutput, DetectorError> {
    let mut det = FallDetector::new(*config, poses.topology())?;
    let mut events = Vec::new();
    let mut windows = Vec::new();
    for pose in poses.frames() {
        events.extend(det.push(pose, 1.0)?);
        windows.extend(det.take_windows());
    }
    events.extend(det.finish());
    Ok(DetectionOutput { events, windows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use BalanceState::*;

    #[test]
    fn fall_pattern_needs_lob_before_gis() {
        let l = [StableBalance, LossOfBalance, LossOfBalance, Undefined, GroundImpact, GroundImpact];
        assert_eq!(find_fall(&l, 0, 6), Some((1, 4)));
        assert_eq!(find_fall(&l, 5, 6), Some((1, 5)));
        let l = [LossOfBalance, StableBalance, GroundImpact];
        assert_eq!(find_fall(&l, 0, 3), None);
        let l = [GroundImpact, LossOfBalance];
        assert_eq!(find_fall(&l, 0, 2), None);
    }

    #[test]
    fn gis_beyond_the_span_does_not_count() {
        let l = [LossOfBalance, LossOfBalance, Undefined, GroundImpact];
        assert_eq!(find_fall(&l, 0, 3), None);
    }
}

use serde::{Deserialize, Serialize};

use super::{BalanceError, SmobTrajectory};
use crate::pose::{PoseSequence, WorldPose};

/// Three-stage fall progression plus a catch-all for ambiguous frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BalanceState {
    #[serde(rename = "SB")]
    StableBalance,
    #[serde(rename = "LoB")]
    LossOfBalance,
    #[serde(rename = "GIS")]
    GroundImpact,
    Undefined,
}

impl BalanceState {
    pub fn short_name(self) -> &'static str {
        match self {
            BalanceState::StableBalance => "SB",
            BalanceState::LossOfBalance => "LoB",
            BalanceState::GroundImpact => "GIS",
            BalanceState::Undefined => "Undefined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationParams {
    /// Minimum run of unstable frames before it is labeled loss of balance.
    pub lob_persistence: usize,
    /// Pelvis height (m) below which a frame is ground impact.
    pub gis_height: f64,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self { lob_persistence: 2, gis_height: 0.35 }
    }
}

pub type BalanceStateSequence = Vec<BalanceState>;

/// Per-frame inputs to the labeling rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameBalance {
    pub smob: Option<f64>,
    pub descending: bool,
    pub pelvis_height: f64,
}

impl FrameBalance {
    /// Negative margin, or no support while the CoM is dropping.
    pub fn unstable(&self) -> bool {
        match self.smob {
            Some(m) => m < 0.0,
            None => self.descending,
        }
    }
}

/// Labels frames: GIS below `gis_height`, SB for non-negative margins, LoB
/// over every unstable run at least `lob_persistence` long, Undefined
/// otherwise.
pub fn label_frames(frames: &[FrameBalance], params: &SegmentationParams) -> BalanceStateSequence {
    let persistence = params.lob_persistence.max(1);
    let mut in_long_run = vec![false; frames.len()];
    let mut i = 0;
    while i < frames.len() {
        if !frames[i].unstable() {
            i += 1;
            continue;
        }
        let start = i;
        while i < frames.len() && frames[i].unstable() {
            i += 1;
        }
        if i - start >= persistence {
            in_long_run[start..i].iter_mut().for_each(|f| *f = true);
        }
    }
    frames
        .iter()
        .zip(in_long_run)
        .map(|(f, long)| {
            if f.pelvis_height < params.gis_height {
                BalanceState::GroundImpact
            } else if f.smob.is_some_and(|m| m >= 0.0) {
                BalanceState::StableBalance
            } else if long {
                BalanceState::LossOfBalance
            } else {
                BalanceState::Undefined
            }
        })
        .collect()
}

/// Segments a trajectory into SB / LoB / GIS / Undefined.
pub fn segment_states(
    traj: &SmobTrajectory,
    seq: &PoseSequence<WorldPose>,
    params: &SegmentationParams,
) -> Result<BalanceStateSequence, BalanceError> {
    if traj.len() != seq.len() {
        return Err(BalanceError::LengthMismatch { trajectory: traj.len(), poses: seq.len() });
    }
    let pelvis = seq
        .topology()
        .index_of("pelvis")
        .map_err(|_| BalanceError::MissingJoint("pelvis".into()))?;
    let frames: Vec<FrameBalance> = traj
        .samples
        .iter()
        .zip(seq.frames())
        .enumerate()
        .map(|(i, (s, p))| FrameBalance {
            smob: s.smob,
            descending: traj.descending(i),
            pelvis_height: p.joints[pelvis].z,
        })
        .collect();
    Ok(label_frames(&frames, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use BalanceState::*;

    fn frames(smob: &[Option<f64>], pelvis: f64) -> Vec<FrameBalance> {
        smob.iter().map(|&smob| FrameBalance { smob, descending: false, pelvis_height: pelvis }).collect()
    }

    #[test]
    fn constant_positive_is_all_stable() {
        let labels = label_frames(&frames(&[Some(0.2); 30], 0.9), &SegmentationParams::default());
        assert!(labels.iter().all(|&l| l == StableBalance));
    }

    #[test]
    fn loss_of_balance_starts_at_first_negative_frame() {
        let smob = [Some(0.1), Some(0.05), Some(-0.02), Some(-0.06), Some(-0.1), Some(-0.15)];
        let labels = label_frames(&frames(&smob, 0.9), &SegmentationParams::default());
        assert_eq!(labels, vec![StableBalance, StableBalance, LossOfBalance, LossOfBalance, LossOfBalance, LossOfBalance]);
    }

    #[test]
    fn short_negative_blip_is_undefined() {
        let smob = [Some(0.1), Some(-0.01), Some(0.1)];
        let labels = label_frames(&frames(&smob, 0.9), &SegmentationParams::default());
        assert_eq!(labels, vec![StableBalance, Undefined, StableBalance]);
    }

    #[test]
    fn low_pelvis_is_ground_impact() {
        let labels = label_frames(&frames(&[Some(0.3), Some(-0.4)], 0.2), &SegmentationParams::default());
        assert_eq!(labels, vec![GroundImpact, GroundImpact]);
    }

    #[test]
    fn airborne_counts_only_while_descending() {
        let mut f = frames(&[None, None, None, None], 0.9);
        f[2].descending = true;
        f[3].descending = true;
        let labels = label_frames(&f, &SegmentationParams::default());
        assert_eq!(labels, vec![Undefined, Undefined, LossOfBalance, LossOfBalance]);
    }
}

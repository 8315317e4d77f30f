use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{compute_bos, compute_com, signed_margin, AnthropometricTable, BalanceError, SupportPolygon};
use crate::geometry::Vec3;
use crate::pose::{PoseSequence, WorldPose};

/// Vertical CoM motion slower than this does not count as descending (m/s).
pub const DESCENT_SPEED_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmobSample {
    pub t: f64,
    /// Signed margin in meters; `None` on frames without ground contact.
    pub smob: Option<f64>,
    pub com: Vec3,
    pub bos: Option<SupportPolygon>,
}

impl SmobSample {
    pub fn from_pose(
        pose: &WorldPose,
        table: &AnthropometricTable,
        contact_joints: &[usize],
        contact_epsilon: f64,
    ) -> Result<Self, BalanceError> {
        let com = compute_com(pose, table)?;
        let bos = compute_bos(pose, contact_joints, contact_epsilon);
        let smob = bos.as_ref().map(|b| signed_margin(com.horizontal(), b));
        Ok(Self { t: pose.timestamp, smob, com, bos })
    }
}

/// Per-frame CoM, support and signed margin over a pose sequence.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SmobTrajectory {
    pub samples: Vec<SmobSample>,
}

impl SmobTrajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn smob_values(&self) -> Vec<Option<f64>> {
        self.samples.iter().map(|s| s.smob).collect()
    }

    /// Whether the CoM moved down between frame `i - 1` and `i`.
    pub fn descending(&self, i: usize) -> bool {
        descending_at(&self.samples, i)
    }

    /// CSV with columns `t,smob,com_x,com_y,com_z`; undefined margins are empty.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t,smob,com_x,com_y,com_z")?;
        for s in &self.samples {
            let smob = s.smob.map(|v| v.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{},{}", s.t, smob, s.com.x, s.com.y, s.com.z)?;
        }
        Ok(())
    }
}

pub(crate) fn descending_at(samples: &[SmobSample], i: usize) -> bool {
    if i == 0 || i >= samples.len() {
        return false;
    }
    let (a, b) = (&samples[i - 1], &samples[i]);
    let dt = b.t - a.t;
    dt > 0.0 && (b.com.z - a.com.z) / dt < -DESCENT_SPEED_EPS
}

/// Per-frame balance margins for a world-space sequence.
pub fn smob_trajectory(
    seq: &PoseSequence<WorldPose>,
    table: &AnthropometricTable,
    contact_epsilon: f64,
) -> Result<SmobTrajectory, BalanceError> {
    let contacts = seq.topology().contact_joints();
    let samples = seq
        .frames()
        .iter()
        .map(|p| SmobSample::from_pose(p, table, &contacts, contact_epsilon))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SmobTrajectory { samples })
}

//! Skeleton topology and pose containers shared by every other module.
//!
//! World poses use a z-up frame with the ground plane at z = 0, x lateral and
//! y forward, all in meters. Image-plane poses (2.5D) carry normalized
//! `(u, v)` coordinates plus a metric depth along the optical axis.

mod io;

pub use io::{load_pose_sequence, load_world_sequence, write_pose_sequence, AnySequence, SequenceHeader};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum PoseError {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("frame {frame}: expected {expected} joints, found {found}")]
    JointCount { frame: usize, expected: usize, found: usize },
    #[error("frame {frame}: timestamp {t} does not increase")]
    NonMonotone { frame: usize, t: f64 },
    #[error("frame {frame}: non-finite coordinate")]
    NonFinite { frame: usize },
    #[error("file topology {found:?} does not match expected joints {expected:?}")]
    TopologyMismatch { expected: Vec<String>, found: Vec<String> },
    #[error("file holds {found} poses but {expected} was requested")]
    SpaceMismatch { expected: Space, found: Space },
    #[error("empty sequence")]
    EmptySequence,
    #[error("unknown joint {0:?}")]
    UnknownJoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coordinate space tag stored in pose file headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    World,
    Image25d,
}

impl std::fmt::Display for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Space::World => "world",
            Space::Image25d => "image25d",
        })
    }
}

/// Ordered joint set plus the bone tree connecting it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonTopology {
    joint_names: Vec<String>,
    bones: Vec<(usize, usize)>,
}

impl SkeletonTopology {
    pub fn new(joint_names: Vec<String>, bones: Vec<(usize, usize)>) -> Result<Self, PoseError> {
        let j = joint_names.len();
        if j == 0 {
            return Err(PoseError::InvalidTopology("no joints".into()));
        }
        let mut seen = HashSet::new();
        for name in &joint_names {
            if !seen.insert(name.as_str()) {
                return Err(PoseError::InvalidTopology(format!("duplicate joint name {name:?}")));
            }
        }
        for &(a, b) in &bones {
            if a >= j || b >= j {
                return Err(PoseError::InvalidTopology(format!("bone ({a}, {b}) out of range for {j} joints")));
            }
            if a == b {
                return Err(PoseError::InvalidTopology(format!("self-loop bone at joint {a}")));
            }
        }
        // a tree on J nodes has exactly J-1 edges and is connected
        if bones.len() != j - 1 {
            return Err(PoseError::InvalidTopology(format!(
                "{} bones cannot form a spanning tree over {j} joints",
                bones.len()
            )));
        }
        let mut parent: Vec<usize> = (0..j).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(a, b) in &bones {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return Err(PoseError::InvalidTopology(format!("bone ({a}, {b}) closes a cycle")));
            }
            parent[ra] = rb;
        }
        Ok(Self { joint_names, bones })
    }

    /// The 17-joint reduction used throughout the crate.
    pub fn default_17() -> Self {
        let names = DEFAULT_JOINTS.iter().map(|s| s.to_string()).collect();
        let bones = DEFAULT_BONES.to_vec();
        Self::new(names, bones).expect("default topology is a valid tree")
    }

    pub fn joint_count(&self) -> usize {
        self.joint_names.len()
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn bones(&self) -> &[(usize, usize)] {
        &self.bones
    }

    pub fn index_of(&self, name: &str) -> Result<usize, PoseError> {
        self.joint_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| PoseError::UnknownJoint(name.to_string()))
    }

    /// Joints eligible as ground contacts: every foot-segment joint, matched
    /// by name (`ankle`, `foot`, `toe`, `heel`).
    pub fn contact_joints(&self) -> Vec<usize> {
        self.joint_names
            .iter()
            .enumerate()
            .filter(|(_, n)| {
                let n = n.to_ascii_lowercase();
                ["ankle", "foot", "toe", "heel"].iter().any(|k| n.contains(k))
            })
            .map(|(i, _)| i)
            .collect()
    }
}

pub const DEFAULT_JOINTS: [&str; 17] = [
    "head", "neck", "l_shoulder", "r_shoulder", "l_elbow", "r_elbow", "l_wrist", "r_wrist", "pelvis", "l_hip",
    "r_hip", "l_knee", "r_knee", "l_ankle", "r_ankle", "l_foot", "r_foot",
];

/// Indices into [`DEFAULT_JOINTS`].
pub mod joint {
    pub const HEAD: usize = 0;
    pub const NECK: usize = 1;
    pub const L_SHOULDER: usize = 2;
    pub const R_SHOULDER: usize = 3;
    pub const L_ELBOW: usize = 4;
    pub const R_ELBOW: usize = 5;
    pub const L_WRIST: usize = 6;
    pub const R_WRIST: usize = 7;
    pub const PELVIS: usize = 8;
    pub const L_HIP: usize = 9;
    pub const R_HIP: usize = 10;
    pub const L_KNEE: usize = 11;
    pub const R_KNEE: usize = 12;
    pub const L_ANKLE: usize = 13;
    pub const R_ANKLE: usize = 14;
    pub const L_FOOT: usize = 15;
    pub const R_FOOT: usize = 16;
}

const DEFAULT_BONES: [(usize, usize); 16] = [
    (0, 1),
    (1, 2),
    (1, 3),
    (2, 4),
    (3, 5),
    (4, 6),
    (5, 7),
    (1, 8),
    (8, 9),
    (8, 10),
    (9, 11),
    (10, 12),
    (11, 13),
    (12, 14),
    (13, 15),
    (14, 16),
];

/// A single 3D pose in world meters.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldPose {
    pub joints: Vec<Vec3>,
    pub timestamp: f64,
}

impl WorldPose {
    pub fn new(joints: Vec<Vec3>, timestamp: f64) -> Self {
        Self { joints, timestamp }
    }

    pub fn map_joints(&self, f: impl Fn(Vec3) -> Vec3) -> WorldPose {
        WorldPose {
            joints: self.joints.iter().map(|&p| f(p)).collect(),
            timestamp: self.timestamp,
        }
    }
}

/// Normalized image-plane coordinates plus metric depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagePoint {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

/// 2.5D pose; `None` marks a joint behind the camera.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose25D {
    pub joints: Vec<Option<ImagePoint>>,
    pub timestamp: f64,
}

/// Behaviour shared by the pose representations a sequence may hold.
pub trait PoseFrame: Clone + std::fmt::Debug {
    const SPACE: Space;
    fn timestamp(&self) -> f64;
    fn joint_count(&self) -> usize;
    fn all_finite(&self) -> bool;
}

impl PoseFrame for WorldPose {
    const SPACE: Space = Space::World;

    fn timestamp(&self) -> f64 {
        self.timestamp
    }

    fn joint_count(&self) -> usize {
        self.joints.len()
    }

    fn all_finite(&self) -> bool {
        self.timestamp.is_finite() && self.joints.iter().all(|p| p.is_finite())
    }
}

impl PoseFrame for Pose25D {
    const SPACE: Space = Space::Image25d;

    fn timestamp(&self) -> f64 {
        self.timestamp
    }

    fn joint_count(&self) -> usize {
        self.joints.len()
    }

    fn all_finite(&self) -> bool {
        self.timestamp.is_finite()
            && self
                .joints
                .iter()
                .flatten()
                .all(|p| p.u.is_finite() && p.v.is_finite() && p.depth.is_finite() && p.depth > 0.0)
    }
}

/// Time-ordered poses over a fixed topology.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSequence<P = WorldPose> {
    topology: SkeletonTopology,
    frames: Vec<P>,
    frame_rate: f64,
}

impl<P: PoseFrame> PoseSequence<P> {
    /// Validates joint counts, finiteness and strictly increasing timestamps.
    /// Frame numbers in errors are 1-based.
    pub fn new(topology: SkeletonTopology, frames: Vec<P>, frame_rate: f64) -> Result<Self, PoseError> {
        let j = topology.joint_count();
        let mut prev_t = f64::NEG_INFINITY;
        for (i, f) in frames.iter().enumerate() {
            let frame = i + 1;
            if f.joint_count() != j {
                return Err(PoseError::JointCount { frame, expected: j, found: f.joint_count() });
            }
            if !f.all_finite() {
                return Err(PoseError::NonFinite { frame });
            }
            if f.timestamp() <= prev_t {
                return Err(PoseError::NonMonotone { frame, t: f.timestamp() });
            }
            prev_t = f.timestamp();
        }
        Ok(Self { topology, frames, frame_rate })
    }

    pub fn topology(&self) -> &SkeletonTopology {
        &self.topology
    }

    pub fn frames(&self) -> &[P] {
        &self.frames
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn into_frames(self) -> Vec<P> {
        self.frames
    }

    /// Frames `range`, keeping topology and rate.
    pub fn slice(&self, range: std::ops::Range<usize>) -> PoseSequence<P> {
        PoseSequence {
            topology: self.topology.clone(),
            frames: self.frames[range].to_vec(),
            frame_rate: self.frame_rate,
        }
    }
}

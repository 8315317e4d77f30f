//! Pose JSONL files: a header object on the first line, then one frame per
//! line as `{"t": seconds, "joints": [[x, y, z], ...]}`. Image-space files
//! store `[u, v, depth]` triples, with `null` for joints behind the camera.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ImagePoint, Pose25D, PoseError, PoseFrame, PoseSequence, SkeletonTopology, Space, WorldPose};
use crate::geometry::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceHeader {
    pub topology: Vec<String>,
    pub frame_rate: f64,
    pub space: Space,
}

#[derive(Serialize, Deserialize)]
struct FrameRecord {
    t: f64,
    joints: Vec<Option<[f64; 3]>>,
}

/// A sequence in whichever space its file declared.
#[derive(Debug, Clone, PartialEq)]
pub enum AnySequence {
    World(PoseSequence<WorldPose>),
    Image25d(PoseSequence<Pose25D>),
}

trait JsonlFrame: PoseFrame {
    fn to_record(&self) -> FrameRecord;
    fn from_record(rec: FrameRecord, line: usize) -> Result<Self, PoseError>;
}

impl JsonlFrame for WorldPose {
    fn to_record(&self) -> FrameRecord {
        FrameRecord {
            t: self.timestamp,
            joints: self.joints.iter().map(|p| Some([p.x, p.y, p.z])).collect(),
        }
    }

    fn from_record(rec: FrameRecord, line: usize) -> Result<Self, PoseError> {
        let joints = rec
            .joints
            .into_iter()
            .map(|j| j.map(|[x, y, z]| Vec3::new(x, y, z)))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| PoseError::Malformed { line, message: "null joint in world-space frame".into() })?;
        Ok(WorldPose::new(joints, rec.t))
    }
}

impl JsonlFrame for Pose25D {
    fn to_record(&self) -> FrameRecord {
        FrameRecord {
            t: self.timestamp,
            joints: self.joints.iter().map(|j| j.map(|p| [p.u, p.v, p.depth])).collect(),
        }
    }

    fn from_record(rec: FrameRecord, _line: usize) -> Result<Self, PoseError> {
        Ok(Pose25D {
            joints: rec.joints.into_iter().map(|j| j.map(|[u, v, depth]| ImagePoint { u, v, depth })).collect(),
            timestamp: rec.t,
        })
    }
}

fn malformed(line: usize, e: impl std::fmt::Display) -> PoseError {
    PoseError::Malformed { line, message: e.to_string() }
}

fn read_frames<P: JsonlFrame>(
    lines: impl Iterator<Item = (usize, std::io::Result<String>)>,
    topology: &SkeletonTopology,
    frame_rate: f64,
) -> Result<PoseSequence<P>, PoseError> {
    let expected = topology.joint_count();
    let mut frames = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FrameRecord = serde_json::from_str(&line).map_err(|e| malformed(line_no, e))?;
        if rec.joints.len() != expected {
            return Err(PoseError::JointCount { frame: frames.len() + 1, expected, found: rec.joints.len() });
        }
        frames.push(P::from_record(rec, line_no)?);
    }
    if frames.is_empty() {
        return Err(PoseError::EmptySequence);
    }
    PoseSequence::new(topology.clone(), frames, frame_rate)
}

/// Reads and validates a pose file against `topology`.
pub fn load_pose_sequence(path: impl AsRef<Path>, topology: &SkeletonTopology) -> Result<AnySequence, PoseError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();
    let header: SequenceHeader = match lines.next() {
        Some((_, line)) => serde_json::from_str(&line?).map_err(|e| malformed(1, e))?,
        None => return Err(malformed(1, "missing header line")),
    };
    if header.topology != topology.joint_names() {
        return Err(PoseError::TopologyMismatch {
            expected: topology.joint_names().to_vec(),
            found: header.topology,
        });
    }
    if !(header.frame_rate.is_finite() && header.frame_rate > 0.0) {
        return Err(malformed(1, format!("frame_rate must be positive, got {}", header.frame_rate)));
    }
    Ok(match header.space {
        Space::World => AnySequence::World(read_frames(lines, topology, header.frame_rate)?),
        Space::Image25d => AnySequence::Image25d(read_frames(lines, topology, header.frame_rate)?),
    })
}

/// Like [`load_pose_sequence`] but requires a world-space file.
pub fn load_world_sequence(
    path: impl AsRef<Path>,
    topology: &SkeletonTopology,
) -> Result<PoseSequence<WorldPose>, PoseError> {
    match load_pose_sequence(path, topology)? {
        AnySequence::World(s) => Ok(s),
        AnySequence::Image25d(_) => Err(PoseError::SpaceMismatch { expected: Space::World, found: Space::Image25d }),
    }
}

#[allow(private_bounds)]
pub fn write_pose_sequence<P: JsonlFrame>(seq: &PoseSequence<P>, path: impl AsRef<Path>) -> Result<(), PoseError> {
    if seq.is_empty() {
        return Err(PoseError::EmptySequence);
    }
    let mut w = BufWriter::new(File::create(path)?);
    let header = SequenceHeader {
        topology: seq.topology().joint_names().to_vec(),
        frame_rate: seq.frame_rate(),
        space: P::SPACE,
    };
    serde_json::to_writer(&mut w, &header).map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    for f in seq.frames() {
        serde_json::to_writer(&mut w, &f.to_record()).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

use std::path::Path;

use serde::Deserialize;

use super::BalanceError;
use crate::geometry::Vec3;
use crate::pose::{SkeletonTopology, WorldPose};

const SUM_TOLERANCE: f64 = 1e-9;

const DEFAULT_TABLE: &str = include_str!("../../data/anthropometrics.toml");

/// One rigid body segment: its center is the alpha-weighted joint mean.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub name: String,
    pub joint_indices: Vec<usize>,
    pub alphas: Vec<f64>,
    pub mass_fraction: f64,
}

/// Per-segment joint weights and mass fractions used to aggregate the body
/// center of mass.
#[derive(Debug, Clone, PartialEq)]
pub struct AnthropometricTable {
    segments: Vec<Segment>,
}

#[derive(Deserialize)]
struct TableFile {
    segment: Vec<SegmentRecord>,
}

#[derive(Deserialize)]
struct SegmentRecord {
    name: String,
    mass_fraction: f64,
    joints: Vec<String>,
    alphas: Vec<f64>,
}

impl AnthropometricTable {
    pub fn new(segments: Vec<Segment>) -> Result<Self, BalanceError> {
        if segments.is_empty() {
            return Err(BalanceError::InvalidTable("no segments".into()));
        }
        let mut mass_sum = 0.0;
        for s in &segments {
            if s.joint_indices.is_empty() || s.joint_indices.len() != s.alphas.len() {
                return Err(BalanceError::InvalidTable(format!(
                    "segment {:?}: {} joints but {} alphas",
                    s.name,
                    s.joint_indices.len(),
                    s.alphas.len()
                )));
            }
            if s.alphas.iter().chain([&s.mass_fraction]).any(|w| !w.is_finite() || *w < 0.0) {
                return Err(BalanceError::InvalidTable(format!("segment {:?}: negative or non-finite weight", s.name)));
            }
            let alpha_sum: f64 = s.alphas.iter().sum();
            if (alpha_sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(BalanceError::InvalidTable(format!(
                    "segment {:?}: alphas sum to {alpha_sum}",
                    s.name
                )));
            }
            mass_sum += s.mass_fraction;
        }
        if (mass_sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(BalanceError::InvalidTable(format!("mass fractions sum to {mass_sum}")));
        }
        Ok(Self { segments })
    }

    /// Parses the TOML table format, resolving joint names against `topology`.
    pub fn from_toml_str(text: &str, topology: &SkeletonTopology) -> Result<Self, BalanceError> {
        let file: TableFile = toml::from_str(text).map_err(|e| BalanceError::InvalidTable(e.to_string()))?;
        let segments = file
            .segment
            .into_iter()
            .map(|r| {
                let joint_indices = r
                    .joints
                    .iter()
                    .map(|n| topology.index_of(n).map_err(|_| BalanceError::InvalidTable(format!("unknown joint {n:?}"))))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Segment { name: r.name, joint_indices, alphas: r.alphas, mass_fraction: r.mass_fraction })
            })
            .collect::<Result<Vec<_>, BalanceError>>()?;
        Self::new(segments)
    }

    pub fn load(path: impl AsRef<Path>, topology: &SkeletonTopology) -> Result<Self, BalanceError> {
        let text = std::fs::read_to_string(path).map_err(|e| BalanceError::InvalidTable(e.to_string()))?;
        Self::from_toml_str(&text, topology)
    }

    /// The shipped table for [`SkeletonTopology::default_17`].
    pub fn default_table() -> Self {
        Self::from_toml_str(DEFAULT_TABLE, &SkeletonTopology::default_17()).expect("shipped table is valid")
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    fn check_indices(&self, joint_count: usize) -> Result<(), BalanceError> {
        for s in &self.segments {
            if let Some(&bad) = s.joint_indices.iter().find(|&&i| i >= joint_count) {
                return Err(BalanceError::JointIndex { segment: s.name.clone(), index: bad, joint_count });
            }
        }
        Ok(())
    }
}

/// Whole-body center of mass: Σ_s m_s Σ_k α_{s,k} p_{s,k}.
pub fn compute_com(pose: &WorldPose, table: &AnthropometricTable) -> Result<Vec3, BalanceError> {
    table.check_indices(pose.joints.len())?;
    let com = table.segments.iter().fold(Vec3::ZERO, |acc, s| {
        let center = s
            .joint_indices
            .iter()
            .zip(&s.alphas)
            .fold(Vec3::ZERO, |c, (&j, &a)| c + pose.joints[j] * a);
        acc + center * s.mass_fraction
    });
    Ok(com)
}

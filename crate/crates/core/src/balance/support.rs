use serde::{Deserialize, Serialize};

use crate::geometry::{convex_contains, convex_hull, point_segment_distance, signed_area2, Vec2};
use crate::pose::WorldPose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Degeneracy {
    None,
    Segment,
    Point,
}

/// Base of support: a CCW convex polygon on the ground plane, or the
/// segment/point it collapses to with fewer than three non-collinear contacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportPolygon {
    vertices: Vec<Vec2>,
    degenerate_kind: Degeneracy,
}

impl SupportPolygon {
    /// Hull of the given ground points; `None` when there are none.
    pub fn from_points(points: &[Vec2]) -> Option<Self> {
        let vertices = convex_hull(points);
        let degenerate_kind = match vertices.len() {
            0 => return None,
            1 => Degeneracy::Point,
            2 => Degeneracy::Segment,
            _ => Degeneracy::None,
        };
        Some(Self { vertices, degenerate_kind })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn degenerate_kind(&self) -> Degeneracy {
        self.degenerate_kind
    }

    pub fn area(&self) -> f64 {
        match self.degenerate_kind {
            Degeneracy::None => 0.5 * signed_area2(&self.vertices),
            _ => 0.0,
        }
    }

    /// Closed containment; degenerate supports contain only their own points.
    pub fn contains(&self, p: Vec2) -> bool {
        match self.degenerate_kind {
            Degeneracy::None => convex_contains(&self.vertices, p),
            _ => self.boundary_distance(p) == 0.0,
        }
    }

    /// Distance to the polygon boundary (or to the segment/point itself).
    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        let v = &self.vertices;
        match self.degenerate_kind {
            Degeneracy::Point => p.distance(v[0]),
            Degeneracy::Segment => point_segment_distance(p, v[0], v[1]),
            Degeneracy::None => (0..v.len())
                .map(|i| point_segment_distance(p, v[i], v[(i + 1) % v.len()]))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

/// Convex hull of the ground projections of every contact joint with
/// `z <= contact_epsilon`.
pub fn compute_bos(pose: &WorldPose, contact_joints: &[usize], contact_epsilon: f64) -> Option<SupportPolygon> {
    debug_assert!(contact_epsilon > 0.0);
    let contacts: Vec<Vec2> = contact_joints
        .iter()
        .filter_map(|&j| pose.joints.get(j))
        .filter(|p| p.z <= contact_epsilon)
        .map(|p| p.horizontal())
        .collect();
    SupportPolygon::from_points(&contacts)
}

/// Signed margin of balance: `+d` when the projected CoM is inside or on the
/// support boundary, `-d` outside, with `d` the distance to the boundary.
pub fn signed_margin(com_projection: Vec2, bos: &SupportPolygon) -> f64 {
    let d = bos.boundary_distance(com_projection);
    if d == 0.0 {
        return 0.0;
    }
    match bos.degenerate_kind {
        Degeneracy::None if convex_contains(&bos.vertices, com_projection) => d,
        _ => -d,
    }
}

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CameraModel, ThermalError};
use crate::frame::ThermalImage;
use crate::geometry::Vec2;
use crate::grid::Grid;
use crate::pose::{SkeletonTopology, WorldPose};

const DEFAULT_PROFILE: &str = include_str!("../../data/thermal_profile.toml");

/// A capsule between two joints (a sphere when both are the same joint).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyPart {
    pub name: String,
    pub joints: (usize, usize),
    /// Meters.
    pub radius: f64,
    /// Degrees Celsius.
    pub temperature: f64,
}

/// Surface temperature and extent of each rendered body part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyThermalProfile {
    pub ambient: f64,
    pub parts: Vec<BodyPart>,
}

#[derive(Deserialize)]
struct ProfileFile {
    ambient: f64,
    part: Vec<PartRecord>,
}

#[derive(Deserialize)]
struct PartRecord {
    name: String,
    joints: [String; 2],
    radius: f64,
    temperature: f64,
}

impl BodyThermalProfile {
    pub fn new(ambient: f64, parts: Vec<BodyPart>) -> Result<Self, ThermalError> {
        if !ambient.is_finite() {
            return Err(ThermalError::InvalidProfile("non-finite ambient".into()));
        }
        for p in &parts {
            if !(p.temperature.is_finite() && p.temperature > ambient) {
                return Err(ThermalError::InvalidProfile(format!(
                    "part {:?} at {} C is not above ambient {ambient} C",
                    p.name, p.temperature
                )));
            }
            if !(p.radius > 0.0 && p.radius.is_finite()) {
                return Err(ThermalError::InvalidProfile(format!("part {:?} radius {}", p.name, p.radius)));
            }
        }
        Ok(Self { ambient, parts })
    }

    pub fn from_toml_str(text: &str, topology: &SkeletonTopology) -> Result<Self, ThermalError> {
        let file: ProfileFile = toml::from_str(text).map_err(|e| ThermalError::InvalidProfile(e.to_string()))?;
        let idx = |n: &str| topology.index_of(n).map_err(|e| ThermalError::InvalidProfile(e.to_string()));
        let parts = file
            .part
            .into_iter()
            .map(|r| {
                Ok(BodyPart {
                    joints: (idx(&r.joints[0])?, idx(&r.joints[1])?),
                    name: r.name,
                    radius: r.radius,
                    temperature: r.temperature,
                })
            })
            .collect::<Result<Vec<_>, ThermalError>>()?;
        Self::new(file.ambient, parts)
    }

    pub fn load(path: impl AsRef<Path>, topology: &SkeletonTopology) -> Result<Self, ThermalError> {
        let text = std::fs::read_to_string(path).map_err(|e| ThermalError::InvalidProfile(e.to_string()))?;
        Self::from_toml_str(&text, topology)
    }

    /// Shipped profile for the default 17-joint skeleton.
    pub fn default_profile() -> Self {
        Self::from_toml_str(DEFAULT_PROFILE, &SkeletonTopology::default_17()).expect("shipped profile is valid")
    }

    pub fn part(&self, name: &str) -> Option<&BodyPart> {
        self.parts.iter().find(|p| p.name == name)
    }

    /// Same parts, with a different room temperature.
    pub fn with_ambient(&self, ambient: f64) -> Result<Self, ThermalError> {
        Self::new(ambient, self.parts.clone())
    }
}

/// Static warm rectangle in pixel coordinates, `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HotObject {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    pub temperature: f64,
}

/// A sharp rendered frame plus what the blur stage needs: the body-free
/// background and which body part owns each pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedScene {
    pub image: ThermalImage,
    pub background: ThermalImage,
    pub owner: Grid<Option<u16>>,
    pub timestamp: f64,
}

impl RenderedScene {
    pub fn silhouette_pixels(&self) -> usize {
        self.owner.data().iter().filter(|o| o.is_some()).count()
    }
}

/// Ambient plus hot objects.
pub fn render_background(width: usize, height: usize, ambient: f64, hot_objects: &[HotObject]) -> ThermalImage {
    let mut img = Grid::filled(width, height, ambient);
    for o in hot_objects {
        for y in o.y0.min(height)..o.y1.min(height) {
            for x in o.x0.min(width)..o.x1.min(width) {
                *img.get_mut(x, y) = o.temperature;
            }
        }
    }
    img
}

struct ProjectedCapsule {
    a: Vec2,
    b: Vec2,
    ra: f64,
    rb: f64,
    depth: f64,
}

fn project_part(pose: &WorldPose, part: &BodyPart, camera: &CameraModel) -> Option<ProjectedCapsule> {
    let pa = camera.project(*pose.joints.get(part.joints.0)?)?;
    let pb = camera.project(*pose.joints.get(part.joints.1)?)?;
    let f = camera.focal();
    let (ax, ay) = camera.to_pixel(pa);
    let (bx, by) = camera.to_pixel(pb);
    Some(ProjectedCapsule {
        a: Vec2::new(ax, ay),
        b: Vec2::new(bx, by),
        ra: part.radius * f / pa.depth,
        rb: part.radius * f / pb.depth,
        depth: 0.5 * (pa.depth + pb.depth),
    })
}

/// Renders each body part as a projected capsule filled with its surface
/// temperature, far parts first so nearer ones paint over them.
pub fn render_frame(
    pose: &WorldPose,
    profile: &BodyThermalProfile,
    camera: &CameraModel,
    hot_objects: &[HotObject],
) -> RenderedScene {
    let (w, h) = (camera.width(), camera.height());
    let background = render_background(w, h, profile.ambient, hot_objects);
    let mut image = background.clone();
    let mut owner = Grid::filled(w, h, None);

    let mut capsules: Vec<(usize, ProjectedCapsule)> = profile
        .parts
        .iter()
        .enumerate()
        .filter_map(|(i, part)| project_part(pose, part, camera).map(|c| (i, c)))
        .collect();
    capsules.sort_by(|(ia, a), (ib, b)| b.depth.total_cmp(&a.depth).then(ia.cmp(ib)));

    for (idx, cap) in &capsules {
        let temp = profile.parts[*idx].temperature;
        let rmax = cap.ra.max(cap.rb);
        let x_lo = (cap.a.x.min(cap.b.x) - rmax).floor().max(0.0) as usize;
        let y_lo = (cap.a.y.min(cap.b.y) - rmax).floor().max(0.0) as usize;
        let x_hi = ((cap.a.x.max(cap.b.x) + rmax).ceil().max(0.0) as usize).min(w);
        let y_hi = ((cap.a.y.max(cap.b.y) + rmax).ceil().max(0.0) as usize).min(h);
        let ab = cap.b - cap.a;
        let len2 = ab.dot(ab);
        for y in y_lo..y_hi {
            for x in x_lo..x_hi {
                let p = Vec2::new(x as f64 + 0.5, y as f64 + 0.5);
                let t = if len2 > 0.0 { ((p - cap.a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
                let r = cap.ra + (cap.rb - cap.ra) * t;
                if p.distance(cap.a + ab * t) <= r {
                    *image.get_mut(x, y) = temp;
                    *owner.get_mut(x, y) = Some(*idx as u16);
                }
            }
        }
    }
    RenderedScene { image, background, owner, timestamp: pose.timestamp }
}

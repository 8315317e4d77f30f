//! Scene files: a TOML description of what `tafall sim` should render.
//!
//! ```toml
//! script = "walk.jsonl"      # pose JSONL, relative to the scene file
//! # scenario = "forward"     # or one of the built-in scripted scenarios
//! sensor_id = 1
//! seed = 7
//! noise_sigma = 0.3
//! tau = 0.1
//!
//! [camera]
//! position = [0.0, -3.2, 1.6]
//! target = [0.0, 0.0, 0.8]
//!
//! [[hot_object]]
//! x0 = 5
//! y0 = 40
//! x1 = 12
//! y1 = 50
//! temperature = 45.0
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{BlurParams, BodyThermalProfile, CameraModel, HotObject, SimParams, ThermalError};
use crate::geometry::Vec3;
use crate::pose::{load_world_sequence, PoseSequence, SkeletonTopology, WorldPose};
use crate::scenario;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub script: Option<PathBuf>,
    pub scenario: Option<String>,
    #[serde(default = "default_sensor")]
    pub sensor_id: u16,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    pub ambient: Option<f64>,
    pub profile: Option<PathBuf>,
    pub camera: Option<CameraSpec>,
    #[serde(default)]
    pub hot_object: Vec<HotObject>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub position: [f64; 3],
    pub target: [f64; 3],
}

fn default_sensor() -> u16 {
    1
}

fn default_tau() -> f64 {
    BlurParams::default().tau
}

/// Everything needed to run a simulation, resolved from a scene file.
#[derive(Debug, Clone)]
pub struct Scene {
    pub script: PoseSequence<WorldPose>,
    pub camera: CameraModel,
    pub profile: BodyThermalProfile,
    pub params: SimParams,
    pub sensor_id: u16,
}

impl SceneFile {
    pub fn parse(text: &str) -> Result<Self, ThermalError> {
        toml::from_str(text).map_err(|e| ThermalError::Scene(e.to_string()))
    }

    /// Loads referenced files relative to `base_dir`.
    pub fn resolve(self, base_dir: &Path) -> Result<Scene, ThermalError> {
        let topology = SkeletonTopology::default_17();
        let (script, default_camera) = match (&self.script, &self.scenario) {
            (Some(path), None) => (load_world_sequence(base_dir.join(path), &topology)?, None),
            (None, Some(name)) => {
                let s = scenario::scenario_by_name(name)
                    .ok_or_else(|| ThermalError::Scene(format!("unknown scenario {name:?}")))?;
                (s.poses, Some(s.camera))
            }
            _ => return Err(ThermalError::Scene("exactly one of `script` or `scenario` is required".into())),
        };
        let camera = match (&self.camera, default_camera) {
            (Some(c), _) => {
                let [px, py, pz] = c.position;
                let [tx, ty, tz] = c.target;
                CameraModel::reference_sensor(Vec3::new(px, py, pz), Vec3::new(tx, ty, tz))?
            }
            (None, Some(c)) => c,
            (None, None) => return Err(ThermalError::Scene("missing [camera] section".into())),
        };
        let mut profile = match &self.profile {
            Some(p) => BodyThermalProfile::load(base_dir.join(p), &topology)?,
            None => BodyThermalProfile::default_profile(),
        };
        if let Some(a) = self.ambient {
            profile = profile.with_ambient(a)?;
        }
        let params = SimParams {
            hot_objects: self.hot_object,
            blur: BlurParams { tau: self.tau, sigma_noise: self.noise_sigma, ..BlurParams::default() },
            seed: self.seed,
            ..SimParams::default()
        };
        Ok(Scene { script, camera, profile, params, sensor_id: self.sensor_id })
    }
}

/// Parses and resolves a scene file from disk.
pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene, ThermalError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ThermalError::Scene(format!("{}: {e}", path.display())))?;
    SceneFile::parse(&text)?.resolve(path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_scenario_scene_resolves() {
        let scene = SceneFile::parse("scenario = \"forward\"\nseed = 3\nnoise_sigma = 0.2\n")
            .unwrap()
            .resolve(Path::new("."))
            .unwrap();
        assert!(scene.script.len() > 100);
        assert_eq!(scene.params.seed, 3);
        assert_eq!(scene.params.blur.sigma_noise, 0.2);
    }

    #[test]
    fn scene_requires_one_source() {
        let err = SceneFile::parse("seed = 1\n").unwrap().resolve(Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("script"));
        assert!(SceneFile::parse("bogus = 1\n").is_err());
    }
}

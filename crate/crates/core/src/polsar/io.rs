//! `PSCENE v1` directory format: `meta.json`, `features.f32` (little-endian,
//! row-major H×W×9) and `labels.u8` (H×W, 255 = unlabeled).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Scene, FEATURE_COUNT};
use crate::{Error, Result};

pub const SCENE_VERSION: &str = "1";
const META_FILE: &str = "meta.json";
const FEATURES_FILE: &str = "features.f32";
const LABELS_FILE: &str = "labels.u8";

/// Class prototype as recorded in a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeDescriptor {
    pub name: String,
    /// Surface, double-bounce, volume mixture weights.
    pub weights: [f64; 3],
    pub span_scale: f64,
    /// Prototype coherency in feature order.
    pub coherency: [f64; FEATURE_COUNT],
    /// Binary concept vector derived from the prototype.
    pub concepts: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMeta {
    pub version: String,
    pub width: usize,
    pub height: usize,
    pub looks: usize,
    pub seed: u64,
    pub class_names: Vec<String>,
    pub prototypes: Vec<PrototypeDescriptor>,
}

impl SceneMeta {
    pub fn new(
        width: usize,
        height: usize,
        looks: usize,
        seed: u64,
        class_names: Vec<String>,
        prototypes: Vec<PrototypeDescriptor>,
    ) -> Self {
        Self {
            version: SCENE_VERSION.to_string(),
            width,
            height,
            looks,
            seed,
            class_names,
            prototypes,
        }
    }
}

pub fn write_scene(dir: &Path, scene: &Scene) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut meta = serde_json::to_vec_pretty(&scene.meta)?;
    meta.push(b'\n');
    fs::write(dir.join(META_FILE), meta)?;
    let bytes: Vec<u8> = scene.features().iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(dir.join(FEATURES_FILE), bytes)?;
    fs::write(dir.join(LABELS_FILE), scene.labels())?;
    Ok(())
}

pub fn read_scene(dir: &Path) -> Result<Scene> {
    let meta: SceneMeta = serde_json::from_slice(&fs::read(dir.join(META_FILE))?)?;
    if meta.version != SCENE_VERSION {
        return Err(Error::Format(format!("unsupported scene version {}", meta.version)));
    }
    let raw = fs::read(dir.join(FEATURES_FILE))?;
    if raw.len() % 4 != 0 {
        return Err(Error::Format("feature file length not a multiple of 4".into()));
    }
    let features = raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    let labels = fs::read(dir.join(LABELS_FILE))?;
    Scene::new(meta, features, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let meta = SceneMeta::new(3, 2, 4, 9, vec!["x".into()], vec![]);
        let features: Vec<f32> = (0..54).map(|i| (i as f32).sqrt() * -1.37e-3).collect();
        let labels = vec![0, 255, 0, 0, 255, 0];
        let scene = Scene::new(meta, features, labels).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_scene(dir.path(), &scene).unwrap();
        let back = read_scene(dir.path()).unwrap();
        assert_eq!(back, scene);
        assert_eq!(
            fs::read(dir.path().join(FEATURES_FILE)).unwrap().len(),
            54 * 4
        );
    }

    #[test]
    fn wrong_version_rejected() {
        let meta = SceneMeta::new(1, 1, 1, 0, vec!["x".into()], vec![]);
        let scene = Scene::new(meta, vec![0.0; 9], vec![0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_scene(dir.path(), &scene).unwrap();
        let text = fs::read_to_string(dir.path().join(META_FILE)).unwrap();
        fs::write(dir.path().join(META_FILE), text.replace("\"1\"", "\"2\"")).unwrap();
        assert!(matches!(read_scene(dir.path()), Err(Error::Format(_))));
    }
}

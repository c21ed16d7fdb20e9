use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{build_prototypes, default_prototype_specs, HermitianFactor, PrototypeSpec};
use crate::par::Exec;
use crate::polsar::{Scene, SceneMeta, FEATURE_COUNT};
use crate::rng::{stream, Domain};
use crate::{Error, Result};

const SPAN_JITTER: f64 = 0.1;

/// Rectangle of pixels belonging to one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub class: usize,
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

/// Everything needed to generate a scene deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    #[serde(default = "default_looks")]
    pub looks: usize,
    #[serde(default)]
    pub seed: u64,
    pub regions: Vec<Region>,
    #[serde(default = "default_prototype_specs")]
    pub prototypes: Vec<PrototypeSpec>,
}

fn default_looks() -> usize {
    8
}

impl Default for SceneSpec {
    /// 192×128 scene tiled by six 64×64 class regions, eight looks, seed 42.
    fn default() -> Self {
        let regions = (0..6)
            .map(|class| Region {
                class,
                row: (class / 3) * 64,
                col: (class % 3) * 64,
                height: 64,
                width: 64,
            })
            .collect();
        Self {
            width: 192,
            height: 128,
            looks: 8,
            seed: 42,
            regions,
            prototypes: default_prototype_specs(),
        }
    }
}

impl SceneSpec {
    /// Per-pixel class index; regions must tile the scene without overlap.
    fn class_map(&self) -> Result<Vec<usize>> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidLayout("empty scene".into()));
        }
        if self.looks == 0 {
            return Err(Error::NoLooks);
        }
        let mut map = vec![usize::MAX; self.width * self.height];
        let mut used = vec![false; self.prototypes.len()];
        for (i, r) in self.regions.iter().enumerate() {
            if r.class >= self.prototypes.len() {
                return Err(Error::InvalidLayout(format!("region {i} uses unknown class {}", r.class)));
            }
            if r.height == 0 || r.width == 0 || r.row + r.height > self.height || r.col + r.width > self.width {
                return Err(Error::InvalidLayout(format!("region {i} out of bounds")));
            }
            used[r.class] = true;
            for row in r.row..r.row + r.height {
                for col in r.col..r.col + r.width {
                    let cell = &mut map[row * self.width + col];
                    if *cell != usize::MAX {
                        return Err(Error::InvalidLayout(format!("region {i} overlaps another region")));
                    }
                    *cell = r.class;
                }
            }
        }
        if let Some(p) = map.iter().position(|&c| c == usize::MAX) {
            return Err(Error::InvalidLayout(format!(
                "pixel ({}, {}) not covered by any region",
                p / self.width,
                p % self.width
            )));
        }
        if let Some(c) = used.iter().position(|u| !u) {
            return Err(Error::InvalidLayout(format!("class {c} has no region")));
        }
        Ok(map)
    }
}

/// Generates a scene. Each region draws a ±10% span jitter from its own
/// stream and each pixel draws its speckle from a stream keyed on its index,
/// so the output does not depend on the execution policy.
pub fn generate_scene(spec: &SceneSpec, exec: Exec) -> Result<Scene> {
    let protos = build_prototypes(&spec.prototypes)?;
    let map = spec.class_map()?;
    let region_of: Vec<usize> = {
        let mut r = vec![0; map.len()];
        for (i, reg) in spec.regions.iter().enumerate() {
            for row in reg.row..reg.row + reg.height {
                for col in reg.col..reg.col + reg.width {
                    r[row * spec.width + col] = i;
                }
            }
        }
        r
    };
    let factors = spec
        .regions
        .iter()
        .enumerate()
        .map(|(i, reg)| {
            let mut rng = stream(spec.seed, Domain::RegionJitter, i as u64);
            let jitter = rng.random_range(1.0 - SPAN_JITTER..=1.0 + SPAN_JITTER);
            HermitianFactor::new(&protos[reg.class].coherency.scale(jitter))
        })
        .collect::<Result<Vec<_>>>()?;

    let pixels = exec.map_range(map.len(), |p| {
        let mut rng = stream(spec.seed, Domain::Pixel, p as u64);
        factors[region_of[p]].sample(spec.looks, &mut rng).map(|t| t.to_features())
    });
    let mut features = Vec::with_capacity(map.len() * FEATURE_COUNT);
    for px in pixels {
        features.extend(px?.iter().map(|&v| v as f32));
    }
    let labels = map.iter().map(|&c| c as u8).collect();
    let meta = SceneMeta::new(
        spec.width,
        spec.height,
        spec.looks,
        spec.seed,
        protos.iter().map(|p| p.name().to_string()).collect(),
        protos.iter().map(|p| p.descriptor()).collect(),
    );
    Scene::new(meta, features, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(width: usize, height: usize, looks: usize) -> SceneSpec {
        SceneSpec {
            width,
            height,
            looks,
            seed: 5,
            regions: vec![
                Region { class: 0, row: 0, col: 0, height, width: width / 2 },
                Region { class: 1, row: 0, col: width / 2, height, width: width - width / 2 },
            ],
            prototypes: default_prototype_specs()[..2].to_vec(),
        }
    }

    #[test]
    fn labels_follow_layout() {
        let s = generate_scene(&small(10, 4, 2), Exec::Sequential).unwrap();
        for row in 0..4 {
            for col in 0..10 {
                assert_eq!(s.label(row, col).unwrap(), Some((col >= 5) as u8));
            }
        }
    }

    #[test]
    fn execution_policy_does_not_change_output() {
        let a = generate_scene(&small(20, 9, 3), Exec::Sequential).unwrap();
        let b = generate_scene(&small(20, 9, 3), Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_layouts() {
        let mut s = small(10, 4, 2);
        s.regions[1].width += 1;
        assert!(matches!(generate_scene(&s, Exec::Sequential), Err(Error::InvalidLayout(_))));
        let mut s = small(10, 4, 2);
        s.regions[1].col -= 1;
        assert!(matches!(generate_scene(&s, Exec::Sequential), Err(Error::InvalidLayout(_))));
        let mut s = small(10, 4, 2);
        s.regions.pop();
        assert!(generate_scene(&s, Exec::Sequential).is_err());
        let mut s = small(10, 4, 2);
        s.regions[1].class = 7;
        assert!(generate_scene(&s, Exec::Sequential).is_err());
        let mut s = small(10, 4, 2);
        s.looks = 0;
        assert!(matches!(generate_scene(&s, Exec::Sequential), Err(Error::NoLooks)));
    }

    #[test]
    fn default_spec_round_trips_through_json() {
        let spec = SceneSpec::default();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<SceneSpec>(&json).unwrap(), spec);
        let minimal = r#"{"width": 4, "height": 4, "regions": [{"class": 0, "row": 0, "col": 0, "height": 4, "width": 4}]}"#;
        let parsed: SceneSpec = serde_json::from_str(minimal).unwrap();
        assert_eq!(parsed.looks, 8);
        assert_eq!(parsed.prototypes.len(), 6);
    }
}

use std::fs;
use std::path::Path;

use polcbm::par::Exec;
use polcbm::polsar::{CoherencyMatrix, Scene};
use polcbm::ptd::{cloude_pottier, freeman_durden, huynen, Huynen};
use serde::{Deserialize, Serialize};

use crate::error::AppResult;

/// Decomposition summary of one coherency matrix. `ps`, `pd` and `pv` are
/// proportions of the total model power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub entropy: f64,
    pub alpha_bar: f64,
    pub anisotropy: f64,
    pub ps: f64,
    pub pd: f64,
    pub pv: f64,
    pub huynen: Huynen,
    pub dop: f64,
    pub span: f64,
    pub clamped: bool,
}

pub fn decompose(t: &CoherencyMatrix) -> AppResult<DecompositionReport> {
    let cp = cloude_pottier(t)?;
    let fd = freeman_durden(&t.diagnostics());
    let [ps, pd, pv] = fd.proportions().unwrap_or([0.0; 3]);
    Ok(DecompositionReport {
        entropy: cp.entropy,
        alpha_bar: cp.alpha_bar,
        anisotropy: cp.anisotropy,
        ps,
        pd,
        pv,
        huynen: huynen(t),
        dop: cp.degree_of_polarization(),
        span: t.trace(),
        clamped: fd.clamped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerInfo {
    pub name: String,
    pub file: String,
    pub channels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionMeta {
    pub version: String,
    pub width: usize,
    pub height: usize,
    pub layers: Vec<LayerInfo>,
    pub huynen_channels: Vec<String>,
}

const SCALAR_LAYERS: [&str; 7] = ["entropy", "alpha_bar", "anisotropy", "surface", "double", "volume", "dop"];

/// Writes per-pixel decomposition rasters (little-endian f32, row-major,
/// channels interleaved) and a `meta.json` describing them. Null targets are
/// written as NaN.
pub fn write_decomposition(scene: &Scene, dir: &Path, exec: Exec) -> AppResult<DecompositionMeta> {
    let (w, h) = (scene.width(), scene.height());
    let per_pixel = exec.map_range(w * h, |p| -> AppResult<Option<DecompositionReport>> {
        let t = scene.coherency(p / w, p % w)?;
        match decompose(&t) {
            Ok(r) => Ok(Some(r)),
            Err(crate::error::AppError::Core(polcbm::Error::NullTarget)) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let reports = per_pixel.into_iter().collect::<AppResult<Vec<_>>>()?;
    fs::create_dir_all(dir)?;
    let mut layers = Vec::new();
    for (i, name) in SCALAR_LAYERS.iter().enumerate() {
        let bytes: Vec<u8> = reports
            .iter()
            .flat_map(|r| {
                let v = r.as_ref().map_or(f64::NAN, |r| {
                    [r.entropy, r.alpha_bar, r.anisotropy, r.ps, r.pd, r.pv, r.dop][i]
                });
                (v as f32).to_le_bytes()
            })
            .collect();
        let file = format!("{name}.f32");
        fs::write(dir.join(&file), bytes)?;
        layers.push(LayerInfo { name: name.to_string(), file, channels: 1 });
    }
    let bytes: Vec<u8> = reports
        .iter()
        .flat_map(|r| r.as_ref().map_or([f64::NAN; 9], |r| r.huynen.to_array()))
        .flat_map(|v| (v as f32).to_le_bytes())
        .collect();
    fs::write(dir.join("huynen.f32"), bytes)?;
    layers.push(LayerInfo { name: "huynen".into(), file: "huynen.f32".into(), channels: 9 });
    let meta = DecompositionMeta {
        version: "1".into(),
        width: w,
        height: h,
        layers,
        huynen_channels: Huynen::NAMES.iter().map(|s| s.to_string()).collect(),
    };
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    fs::write(dir.join("meta.json"), text)?;
    Ok(meta)
}

use base64::Engine;
use polcbm::polsar::{pauli_rgb, Scene, PATCH_HALF};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

pub fn encode_png_rgb(width: usize, height: usize, rgb: &[u8]) -> AppResult<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().map_err(|e| AppError::Png(e.to_string()))?;
        w.write_image_data(rgb).map_err(|e| AppError::Png(e.to_string()))?;
        w.finish().map_err(|e| AppError::Png(e.to_string()))?;
    }
    Ok(out)
}

/// Scene payload for display clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneView {
    pub width: usize,
    pub height: usize,
    pub looks: usize,
    pub class_names: Vec<String>,
    /// Pauli RGB composite as a base64 PNG.
    pub pauli_png: String,
    /// Row-major class indices, 255 for unlabeled pixels.
    pub labels: Vec<u8>,
    /// Minimum distance of a patch anchor from the border.
    pub patch_half: usize,
}

pub fn scene_view(scene: &Scene) -> AppResult<SceneView> {
    let png = encode_png_rgb(scene.width(), scene.height(), &pauli_rgb(scene))?;
    Ok(SceneView {
        width: scene.width(),
        height: scene.height(),
        looks: scene.meta.looks,
        class_names: scene.meta.class_names.clone(),
        pauli_png: base64::engine::general_purpose::STANDARD.encode(png),
        labels: scene.labels().to_vec(),
        patch_half: PATCH_HALF,
    })
}

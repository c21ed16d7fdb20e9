use super::{Scene, FEATURE_COUNT};

/// Pauli false-colour composite: R = T22, G = T33, B = T11 in decibels,
/// each channel stretched between its 2nd and 98th percentile.
///
/// Returns interleaved RGB bytes, row-major.
pub fn pauli_rgb(scene: &Scene) -> Vec<u8> {
    let n = scene.width() * scene.height();
    let channels = [1usize, 2, 0];
    let mut out = vec![0u8; n * 3];
    for (c, &feat) in channels.iter().enumerate() {
        let db: Vec<f64> = scene
            .features()
            .chunks_exact(FEATURE_COUNT)
            .map(|px| 10.0 * (px[feat] as f64).max(1e-12).log10())
            .collect();
        let mut sorted = db.clone();
        sorted.sort_by(f64::total_cmp);
        let lo = percentile(&sorted, 0.02);
        let hi = percentile(&sorted, 0.98);
        for (i, v) in db.iter().enumerate() {
            out[i * 3 + c] = if hi > lo {
                ((v.clamp(lo, hi) - lo) / (hi - lo) * 255.0).round() as u8
            } else {
                128
            };
        }
    }
    out
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let idx = (q * (sorted.len() - 1) as f64).round() as usize;
    sorted[idx]
}

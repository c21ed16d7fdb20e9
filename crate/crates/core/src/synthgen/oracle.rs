use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::par::Exec;
use crate::polsar::{CoherencyMatrix, Scene, C64};
use crate::{Error, Result};

/// Distance used by the nearest-prototype oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleRule {
    /// `‖T − P_c‖_F / span(P_c)` on single pixels.
    RelativeFrobenius,
    /// Wishart maximum-likelihood distance `ln det P_c + tr(P_c⁻¹ T)`.
    Wishart,
    /// Relative Frobenius distance of the 15×15 patch-mean coherency.
    PatchMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub rule: OracleRule,
    pub accuracy: f64,
    pub per_class: Vec<f64>,
    pub pixels: usize,
}

/// Classifies labeled pixels by their nearest class prototype (as recorded in
/// the scene metadata) and reports the accuracy.
pub fn nearest_prototype_accuracy(scene: &Scene, rule: OracleRule, exec: Exec) -> Result<OracleReport> {
    let protos = scene
        .meta
        .prototypes
        .iter()
        .map(|p| CoherencyMatrix::from_features(&p.coherency))
        .collect::<Result<Vec<_>>>()?;
    if protos.len() != scene.class_count() {
        return Err(Error::Format("scene lacks prototype descriptors".into()));
    }
    let inverses: Vec<(f64, Matrix3<C64>)> = protos
        .iter()
        .map(|p| {
            let m = p.to_matrix();
            let det = m.determinant().re;
            let inv = m.try_inverse().ok_or(Error::NotPsd)?;
            Ok((det.ln(), inv))
        })
        .collect::<Result<_>>()?;

    let mut pixels = Vec::new();
    for row in 0..scene.height() {
        for col in 0..scene.width() {
            let interior_needed = rule == OracleRule::PatchMean;
            if let Some(l) = scene.label(row, col)? {
                if !interior_needed || scene.is_interior(row, col) {
                    pixels.push((row, col, l as usize));
                }
            }
        }
    }
    if pixels.is_empty() {
        return Err(Error::EmptyData);
    }
    let predictions = exec.map(&pixels, |&(row, col, _)| -> Result<usize> {
        let t = match rule {
            OracleRule::PatchMean => scene.patch(row, col)?.mean_coherency(),
            _ => scene.coherency(row, col)?,
        };
        let score = |c: usize| match rule {
            OracleRule::Wishart => {
                let (ln_det, inv) = &inverses[c];
                ln_det + (inv * t.to_matrix()).trace().re
            }
            _ => t.frobenius_distance(&protos[c]) / protos[c].trace(),
        };
        let mut best = 0;
        let mut best_score = score(0);
        for c in 1..protos.len() {
            let s = score(c);
            if s < best_score {
                best = c;
                best_score = s;
            }
        }
        Ok(best)
    });
    let mut hits = vec![0usize; protos.len()];
    let mut totals = vec![0usize; protos.len()];
    for (&(_, _, l), p) in pixels.iter().zip(predictions) {
        totals[l] += 1;
        if p? == l {
            hits[l] += 1;
        }
    }
    let correct: usize = hits.iter().sum();
    Ok(OracleReport {
        rule,
        accuracy: correct as f64 / pixels.len() as f64,
        per_class: hits
            .iter()
            .zip(&totals)
            .map(|(&h, &t)| if t > 0 { h as f64 / t as f64 } else { f64::NAN })
            .collect(),
        pixels: pixels.len(),
    })
}

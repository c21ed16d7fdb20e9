use serde::{Deserialize, Serialize};

use crate::polsar::CoherencyMatrix;
use crate::{Error, Result};

/// Eigenvalue-based entropy / alpha / anisotropy decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudePottier {
    /// Eigenvalues, descending, negatives clamped to zero.
    pub lambdas: [f64; 3],
    /// Pseudo-probabilities `λ_n / Σλ`.
    pub probabilities: [f64; 3],
    /// Per-eigenvector scattering angles in degrees.
    pub alphas: [f64; 3],
    pub entropy: f64,
    /// Mean scattering angle in degrees.
    pub alpha_bar: f64,
    pub anisotropy: f64,
}

impl CloudePottier {
    /// Barakat degree of polarimetric purity computed from the eigenvalues.
    pub fn degree_of_polarization(&self) -> f64 {
        let tr: f64 = self.lambdas.iter().sum();
        let tr2: f64 = self.lambdas.iter().map(|l| l * l).sum();
        ((3.0 * tr2 / (tr * tr) - 1.0) / 2.0).max(0.0).sqrt().min(1.0)
    }
}

pub fn cloude_pottier(t: &CoherencyMatrix) -> Result<CloudePottier> {
    let trace = t.trace();
    if !(trace > 0.0) {
        return Err(Error::NullTarget);
    }
    let (raw, vecs) = t.eigen();
    let lambdas = raw.map(|l| l.max(0.0));
    let total: f64 = lambdas.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NullTarget);
    }
    let probabilities = lambdas.map(|l| l / total);
    let entropy = -probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log(3.0))
        .sum::<f64>();
    let mut alphas = [0.0; 3];
    for (n, a) in alphas.iter_mut().enumerate() {
        *a = vecs[0][n].norm().min(1.0).acos().to_degrees();
    }
    let alpha_bar = probabilities.iter().zip(&alphas).map(|(p, a)| p * a).sum::<f64>();
    let minor = lambdas[1] + lambdas[2];
    let anisotropy = if minor < 1e-12 * trace {
        0.0
    } else {
        (lambdas[1] - lambdas[2]) / minor
    };
    Ok(CloudePottier {
        lambdas,
        probabilities,
        alphas,
        entropy: entropy.clamp(0.0, 1.0),
        alpha_bar: alpha_bar.clamp(0.0, 90.0),
        anisotropy,
    })
}

use crate::{Error, Result};

/// Numerically stable `ln(1 + e^z)`.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Softmax probabilities.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Softmax cross-entropy `−ln softmax(logits)[y]` and its gradient with
/// respect to the logits.
pub fn cross_entropy(logits: &[f64], y: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    let mut grad = softmax(logits);
    grad[y] -= 1.0;
    (lse - logits[y], grad)
}

/// Mean binary cross-entropy with logits over all entries, and its gradient.
pub fn bce_with_logits(logits: &[f64], targets: &[f64]) -> (f64, Vec<f64>) {
    let n = logits.len() as f64;
    let mut loss = 0.0;
    let grad = logits
        .iter()
        .zip(targets)
        .map(|(&z, &c)| {
            loss += c * softplus(-z) + (1.0 - c) * softplus(z);
            (crate::kan::sigmoid(z) - c) / n
        })
        .collect();
    (loss / n, grad)
}

/// `main + λ·aux`.
pub fn total_loss(main: f64, aux: f64, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidConfig(format!("lambda must be non-negative, got {lambda}")));
    }
    Ok(main + lambda * aux)
}

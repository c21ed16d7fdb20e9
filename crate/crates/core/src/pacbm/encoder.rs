use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::optim::Parameters;
use crate::polsar::{Patch, FEATURE_COUNT, PATCH_SIZE};
use crate::{Error, Result};

/// Length of the patch summary fed to the encoder.
pub const SUMMARY_LEN: usize = 3 * FEATURE_COUNT;
pub const HIDDEN_WIDTH: usize = 64;
pub const FEATURE_WIDTH: usize = 32;

/// Raw per-channel spatial mean, population std and centre value of a patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchStats {
    pub mean: [f64; FEATURE_COUNT],
    pub std: [f64; FEATURE_COUNT],
    pub center: [f64; FEATURE_COUNT],
}

impl PatchStats {
    pub fn from_patch(patch: &Patch) -> Self {
        // Deviations are taken from the first pixel so constant channels give
        // exactly zero spread.
        let n = (PATCH_SIZE * PATCH_SIZE) as f64;
        let origin = &patch.values()[..FEATURE_COUNT];
        let mut shift = [0.0; FEATURE_COUNT];
        for px in patch.values().chunks_exact(FEATURE_COUNT) {
            for c in 0..FEATURE_COUNT {
                shift[c] += px[c] - origin[c];
            }
        }
        shift.iter_mut().for_each(|m| *m /= n);
        let mut var = [0.0; FEATURE_COUNT];
        for px in patch.values().chunks_exact(FEATURE_COUNT) {
            for c in 0..FEATURE_COUNT {
                let d = px[c] - origin[c] - shift[c];
                var[c] += d * d;
            }
        }
        let mut mean = [0.0; FEATURE_COUNT];
        for c in 0..FEATURE_COUNT {
            mean[c] = origin[c] + shift[c];
        }
        let mut center = [0.0; FEATURE_COUNT];
        center.copy_from_slice(patch.center());
        Self {
            mean,
            std: var.map(|v| (v / n).sqrt()),
            center,
        }
    }
}

/// Per-channel z-score parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: [f64; FEATURE_COUNT],
    pub std: [f64; FEATURE_COUNT],
}

impl Normalization {
    pub fn identity() -> Self {
        Self {
            mean: [0.0; FEATURE_COUNT],
            std: [1.0; FEATURE_COUNT],
        }
    }

    /// Pixel-level statistics pooled over all pixels of the given patches.
    pub fn fit(stats: &[PatchStats]) -> Result<Self> {
        if stats.is_empty() {
            return Err(Error::EmptyData);
        }
        let n = stats.len() as f64;
        let mut mean = [0.0; FEATURE_COUNT];
        let mut second = [0.0; FEATURE_COUNT];
        for s in stats {
            for c in 0..FEATURE_COUNT {
                mean[c] += s.mean[c];
                second[c] += s.std[c] * s.std[c] + s.mean[c] * s.mean[c];
            }
        }
        let mut std = [0.0; FEATURE_COUNT];
        for c in 0..FEATURE_COUNT {
            mean[c] /= n;
            let var = second[c] / n - mean[c] * mean[c];
            std[c] = var.max(0.0).sqrt();
            if !(std[c] > 1e-12) {
                std[c] = 1.0;
            }
        }
        Ok(Self { mean, std })
    }

    pub fn validate(&self) -> Result<()> {
        if self.std.iter().any(|s| !(*s > 0.0 && s.is_finite())) || self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidConfig("normalization std must be positive".into()));
        }
        Ok(())
    }

    /// Summary of the z-scored patch: mean ⊕ std ⊕ centre.
    pub fn summary(&self, s: &PatchStats) -> [f64; SUMMARY_LEN] {
        let mut out = [0.0; SUMMARY_LEN];
        for c in 0..FEATURE_COUNT {
            out[c] = (s.mean[c] - self.mean[c]) / self.std[c];
            out[FEATURE_COUNT + c] = s.std[c] / self.std[c];
            out[2 * FEATURE_COUNT + c] = (s.center[c] - self.mean[c]) / self.std[c];
        }
        out
    }
}

/// Dense `n_out × n_in` affine map, row-major weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            weight: vec![0.0; n_in * n_out],
            bias: vec![0.0; n_out],
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn init<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (n_in + n_out) as f64).sqrt();
        let mut d = Self::zeros(n_in, n_out);
        for w in d.weight.iter_mut() {
            *w = rng.random_range(-limit..limit);
        }
        d
    }

    pub fn from_parts(n_in: usize, n_out: usize, weight: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weight.len() != n_in * n_out || bias.len() != n_out {
            return Err(Error::WidthMismatch {
                expected: n_in * n_out + n_out,
                got: weight.len() + bias.len(),
            });
        }
        Ok(Self { n_in, n_out, weight, bias })
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.n_in, self.n_out)
    }

    pub fn forward(&self, x: &[f64], out: &mut [f64]) {
        for (q, o) in out.iter_mut().enumerate() {
            let row = &self.weight[q * self.n_in..(q + 1) * self.n_in];
            *o = self.bias[q] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    /// Accumulates parameter gradients and optionally adds the input gradient
    /// into `grad_in`.
    pub fn backward(&self, x: &[f64], grad_out: &[f64], grads: &mut Dense, grad_in: Option<&mut [f64]>) {
        for (q, &g) in grad_out.iter().enumerate() {
            grads.bias[q] += g;
            let row = &mut grads.weight[q * self.n_in..(q + 1) * self.n_in];
            for (w, v) in row.iter_mut().zip(x) {
                *w += g * v;
            }
        }
        if let Some(gi) = grad_in {
            for (q, &g) in grad_out.iter().enumerate() {
                let row = &self.weight[q * self.n_in..(q + 1) * self.n_in];
                for (acc, w) in gi.iter_mut().zip(row) {
                    *acc += g * w;
                }
            }
        }
    }
}

impl Parameters for Dense {
    fn groups(&self) -> Vec<&[f64]> {
        vec![&self.weight, &self.bias]
    }

    fn groups_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// Two tanh layers mapping a patch summary to bounded features.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    pub layer1: Dense,
    pub layer2: Dense,
}

/// Activations kept for the encoder backward pass.
#[derive(Debug, Clone)]
pub struct EncoderCache {
    pub summary: [f64; SUMMARY_LEN],
    pub hidden: [f64; HIDDEN_WIDTH],
    pub features: [f64; FEATURE_WIDTH],
}

impl Default for EncoderCache {
    fn default() -> Self {
        Self {
            summary: [0.0; SUMMARY_LEN],
            hidden: [0.0; HIDDEN_WIDTH],
            features: [0.0; FEATURE_WIDTH],
        }
    }
}

impl Encoder {
    pub fn init<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let layer1 = Dense::init(SUMMARY_LEN, HIDDEN_WIDTH, rng);
        let layer2 = Dense::init(HIDDEN_WIDTH, FEATURE_WIDTH, rng);
        Self { layer1, layer2 }
    }

    pub fn zeros() -> Self {
        Self {
            layer1: Dense::zeros(SUMMARY_LEN, HIDDEN_WIDTH),
            layer2: Dense::zeros(HIDDEN_WIDTH, FEATURE_WIDTH),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |d: &Dense, i, o| d.n_in == i && d.n_out == o;
        if !ok(&self.layer1, SUMMARY_LEN, HIDDEN_WIDTH) || !ok(&self.layer2, HIDDEN_WIDTH, FEATURE_WIDTH) {
            return Err(Error::InvalidConfig("encoder shape".into()));
        }
        Ok(())
    }

    pub fn forward(&self, summary: &[f64; SUMMARY_LEN], cache: &mut EncoderCache) {
        cache.summary = *summary;
        self.layer1.forward(summary, &mut cache.hidden);
        cache.hidden.iter_mut().for_each(|h| *h = h.tanh());
        self.layer2.forward(&cache.hidden, &mut cache.features);
        cache.features.iter_mut().for_each(|f| *f = f.tanh());
    }

    pub fn backward(&self, cache: &EncoderCache, grad_features: &[f64; FEATURE_WIDTH], grads: &mut Encoder) {
        let mut g2 = [0.0; FEATURE_WIDTH];
        for i in 0..FEATURE_WIDTH {
            g2[i] = grad_features[i] * (1.0 - cache.features[i] * cache.features[i]);
        }
        let mut gh = [0.0; HIDDEN_WIDTH];
        self.layer2.backward(&cache.hidden, &g2, &mut grads.layer2, Some(&mut gh));
        for i in 0..HIDDEN_WIDTH {
            gh[i] *= 1.0 - cache.hidden[i] * cache.hidden[i];
        }
        self.layer1.backward(&cache.summary, &gh, &mut grads.layer1, None);
    }
}

impl Parameters for Encoder {
    fn groups(&self) -> Vec<&[f64]> {
        let mut g = self.layer1.groups();
        g.extend(self.layer2.groups());
        g
    }

    fn groups_mut(&mut self) -> Vec<&mut [f64]> {
        let mut g = self.layer1.groups_mut();
        g.extend(self.layer2.groups_mut());
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_patch_has_zero_std() {
        let p = Patch::from_values(vec![0.7; Patch::LEN]).unwrap();
        let s = PatchStats::from_patch(&p);
        assert!(s.std.iter().all(|&v| v == 0.0));
        assert!(s.mean.iter().all(|&v| (v - 0.7).abs() < 1e-15));
        assert!(s.center.iter().all(|&v| v == 0.7));
    }

    #[test]
    fn zero_weights_give_zero_features() {
        let enc = Encoder::zeros();
        let mut cache = EncoderCache::default();
        enc.forward(&[0.3; SUMMARY_LEN], &mut cache);
        assert!(cache.features.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn features_are_bounded() {
        let mut rng = crate::rng::stream(0, crate::rng::Domain::EncoderInit, 0);
        let enc = Encoder::init(&mut rng);
        let mut cache = EncoderCache::default();
        enc.forward(&[50.0; SUMMARY_LEN], &mut cache);
        assert!(cache.features.iter().all(|f| f.abs() <= 1.0));
    }

    #[test]
    fn normalization_fit_matches_pixel_statistics() {
        let a = Patch::from_values((0..Patch::LEN).map(|i| (i % 7) as f64).collect()).unwrap();
        let b = Patch::from_values((0..Patch::LEN).map(|i| (i % 5) as f64 * 2.0).collect()).unwrap();
        let norm = Normalization::fit(&[PatchStats::from_patch(&a), PatchStats::from_patch(&b)]).unwrap();
        for c in 0..FEATURE_COUNT {
            let vals: Vec<f64> = [&a, &b]
                .iter()
                .flat_map(|p| p.values().chunks_exact(FEATURE_COUNT).map(move |px| px[c]))
                .collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let v = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / vals.len() as f64;
            assert!((norm.mean[c] - m).abs() < 1e-12);
            assert!((norm.std[c] - v.sqrt()).abs() < 1e-12);
        }
        assert!(Normalization::fit(&[]).is_err());
    }
}

use rand::Rng;

use super::{BSplineGrid, KanLayer, LayerCache};
use crate::optim::Parameters;
use crate::{Error, Result};

/// Composition of KAN layers with chained widths.
#[derive(Debug, Clone, PartialEq)]
pub struct KanNetwork {
    layers: Vec<KanLayer>,
}

/// Per-layer caches and activations from a forward pass.
#[derive(Debug, Clone, Default)]
pub struct NetworkCache {
    layers: Vec<LayerCache>,
    acts: Vec<Vec<f64>>,
    grads: Vec<Vec<f64>>,
}

impl NetworkCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Input to layer `l` (`l == layers` gives the network output).
    pub fn activation(&self, l: usize) -> &[f64] {
        &self.acts[l]
    }
}

impl KanNetwork {
    /// Randomly initialised network with the given widths `[n_0, …, n_L]`.
    pub fn new<R: Rng + ?Sized>(widths: &[usize], grid: &BSplineGrid, rng: &mut R) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::InvalidConfig(format!("invalid KAN widths {widths:?}")));
        }
        let layers = widths
            .windows(2)
            .map(|w| KanLayer::init(w[0], w[1], grid.clone(), rng))
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<KanLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig("KAN needs at least one layer".into()));
        }
        for w in layers.windows(2) {
            if w[0].n_out() != w[1].n_in() {
                return Err(Error::WidthMismatch {
                    expected: w[0].n_out(),
                    got: w[1].n_in(),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self.layers.iter().map(KanLayer::zeros_like).collect(),
        }
    }

    pub fn layers(&self) -> &[KanLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [KanLayer] {
        &mut self.layers
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.layers[0].n_in()];
        w.extend(self.layers.iter().map(KanLayer::n_out));
        w
    }

    pub fn n_in(&self) -> usize {
        self.layers[0].n_in()
    }

    pub fn n_out(&self) -> usize {
        self.layers.last().expect("non-empty").n_out()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut cache = NetworkCache::default();
        self.forward_cached(x, &mut cache)?;
        Ok(cache.output().to_vec())
    }

    pub fn forward_cached(&self, x: &[f64], cache: &mut NetworkCache) -> Result<()> {
        let n = self.layers.len();
        cache.layers.resize_with(n, LayerCache::default);
        cache.acts.resize_with(n + 1, Vec::new);
        cache.acts[0].clear();
        cache.acts[0].extend_from_slice(x);
        for (l, layer) in self.layers.iter().enumerate() {
            let (head, tail) = cache.acts.split_at_mut(l + 1);
            tail[0].resize(layer.n_out(), 0.0);
            layer.forward_cached(&head[l], &mut cache.layers[l], &mut tail[0])?;
        }
        Ok(())
    }

    /// Back-propagates `grad_out` through a cached forward pass, accumulating
    /// into `grads` and optionally writing the input gradient.
    pub fn backward(
        &self,
        cache: &mut NetworkCache,
        grad_out: &[f64],
        grads: &mut KanNetwork,
        grad_in: Option<&mut [f64]>,
    ) {
        let n = self.layers.len();
        cache.grads.resize_with(n + 1, Vec::new);
        cache.grads[n].clear();
        cache.grads[n].extend_from_slice(grad_out);
        let mut grad_in = grad_in;
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            let (lower, upper) = cache.grads.split_at_mut(l + 1);
            let needs_input = l > 0 || grad_in.is_some();
            if l == 0 {
                layer.backward(&cache.layers[0], &upper[0], &mut grads.layers[0], grad_in.as_deref_mut());
            } else {
                lower[l].resize(layer.n_in(), 0.0);
                let gi = if needs_input { Some(&mut lower[l][..]) } else { None };
                layer.backward(&cache.layers[l], &upper[0], &mut grads.layers[l], gi);
            }
        }
    }
}

impl Parameters for KanNetwork {
    fn groups(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| l.groups()).collect()
    }

    fn groups_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().flat_map(|l| l.groups_mut()).collect()
    }
}

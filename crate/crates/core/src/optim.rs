//! Parameter access and the Adam optimizer.

use serde::{Deserialize, Serialize};

/// A model whose trainable values are exposed as a fixed sequence of flat
/// groups. Gradient buffers use the same type and group layout as the
/// parameters they belong to.
pub trait Parameters {
    fn groups(&self) -> Vec<&[f64]>;
    fn groups_mut(&mut self) -> Vec<&mut [f64]>;

    fn parameter_count(&self) -> usize {
        self.groups().iter().map(|g| g.len()).sum()
    }

    fn fill(&mut self, value: f64) {
        for g in self.groups_mut() {
            g.fill(value);
        }
    }

    /// `self += other`, group by group.
    fn accumulate(&mut self, other: &Self)
    where
        Self: Sized,
    {
        for (a, b) in self.groups_mut().into_iter().zip(other.groups()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// Concatenation of all groups.
    fn flatten(&self) -> Vec<f64> {
        self.groups().concat()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step<P: Parameters>(&mut self, params: &mut P, grads: &P) {
        self.step_groups(params.groups_mut(), grads.groups());
    }

    /// Updates an explicit list of parameter groups. The list must have the
    /// same layout on every call.
    pub fn step_groups(&mut self, mut groups: Vec<&mut [f64]>, grads: Vec<&[f64]>) {
        assert_eq!(groups.len(), grads.len(), "parameter and gradient layouts differ");
        if self.m.is_empty() {
            self.m = groups.iter().map(|g| vec![0.0; g.len()]).collect();
            self.v = self.m.clone();
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for (gi, (p, g)) in groups.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[gi], &mut self.v[gi]);
            for j in 0..p.len() {
                m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
                v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                p[j] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
    }
}

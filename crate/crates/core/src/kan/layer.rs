use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{BSplineGrid, MAX_ORDER};
use crate::optim::Parameters;
use crate::{Error, Result};

/// Logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Base activation `x·σ(x)`.
pub fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

fn silu_and_grad(x: f64) -> (f64, f64) {
    let s = sigmoid(x);
    (x * s, s * (1.0 + x * (1.0 - s)))
}

/// One learnable edge function `φ(x) = w_b·x·σ(x) + w_s·Σ c_i B_i(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KanEdge {
    pub coef: Vec<f64>,
    pub w_base: f64,
    pub w_spline: f64,
}

impl KanEdge {
    pub fn eval(&self, x: f64, grid: &BSplineGrid) -> f64 {
        let mut b = [0.0; MAX_ORDER + 1];
        let k = grid.order();
        let (start, _) = grid.local_basis(x, &mut b[..=k], None);
        let spline: f64 = (0..=k).map(|r| self.coef[start + r] * b[r]).sum();
        self.w_base * silu(x) + self.w_spline * spline
    }
}

/// Fully connected layer of edge functions, `out_q = Σ_p φ_qp(x_p)`.
///
/// Coefficients are stored edge-major: edge `(q, p)` owns
/// `coef[(q·n_in + p)·n_basis ..][..n_basis]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KanLayer {
    n_in: usize,
    n_out: usize,
    grid: BSplineGrid,
    coef: Vec<f64>,
    w_base: Vec<f64>,
    w_spline: Vec<f64>,
}

/// Values kept from a forward pass for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct LayerCache {
    x: Vec<f64>,
    start: Vec<usize>,
    basis: Vec<f64>,
    dbasis: Vec<f64>,
    clamped: Vec<bool>,
    base: Vec<f64>,
    dbase: Vec<f64>,
}

impl KanLayer {
    /// A layer with every parameter zero; also used as a gradient buffer.
    pub fn zeros(n_in: usize, n_out: usize, grid: BSplineGrid) -> Self {
        let nb = grid.basis_count();
        Self {
            n_in,
            n_out,
            grid,
            coef: vec![0.0; n_in * n_out * nb],
            w_base: vec![0.0; n_in * n_out],
            w_spline: vec![0.0; n_in * n_out],
        }
    }

    /// Unit base and spline weights, coefficients drawn from
    /// `N(0, (0.1/√(G+k))²)`.
    pub fn init<R: Rng + ?Sized>(n_in: usize, n_out: usize, grid: BSplineGrid, rng: &mut R) -> Self {
        let mut layer = Self::zeros(n_in, n_out, grid);
        let nb = layer.grid.basis_count();
        let normal = Normal::new(0.0, 0.1 / (nb as f64).sqrt()).expect("positive std");
        for c in layer.coef.iter_mut() {
            *c = normal.sample(rng);
        }
        layer.w_base.fill(1.0);
        layer.w_spline.fill(1.0);
        layer
    }

    pub fn from_parts(
        n_in: usize,
        n_out: usize,
        grid: BSplineGrid,
        coef: Vec<f64>,
        w_base: Vec<f64>,
        w_spline: Vec<f64>,
    ) -> Result<Self> {
        let edges = n_in * n_out;
        if coef.len() != edges * grid.basis_count() {
            return Err(Error::WidthMismatch {
                expected: edges * grid.basis_count(),
                got: coef.len(),
            });
        }
        for v in [&w_base, &w_spline] {
            if v.len() != edges {
                return Err(Error::WidthMismatch {
                    expected: edges,
                    got: v.len(),
                });
            }
        }
        Ok(Self {
            n_in,
            n_out,
            grid,
            coef,
            w_base,
            w_spline,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.n_in, self.n_out, self.grid.clone())
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn grid(&self) -> &BSplineGrid {
        &self.grid
    }

    pub fn coef(&self) -> &[f64] {
        &self.coef
    }

    pub fn w_base(&self) -> &[f64] {
        &self.w_base
    }

    pub fn w_spline(&self) -> &[f64] {
        &self.w_spline
    }

    pub fn edge(&self, q: usize, p: usize) -> KanEdge {
        let e = q * self.n_in + p;
        let nb = self.grid.basis_count();
        KanEdge {
            coef: self.coef[e * nb..(e + 1) * nb].to_vec(),
            w_base: self.w_base[e],
            w_spline: self.w_spline[e],
        }
    }

    pub fn set_edge(&mut self, q: usize, p: usize, edge: &KanEdge) -> Result<()> {
        let nb = self.grid.basis_count();
        if edge.coef.len() != nb {
            return Err(Error::WidthMismatch {
                expected: nb,
                got: edge.coef.len(),
            });
        }
        let e = q * self.n_in + p;
        self.coef[e * nb..(e + 1) * nb].copy_from_slice(&edge.coef);
        self.w_base[e] = edge.w_base;
        self.w_spline[e] = edge.w_spline;
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut cache = LayerCache::default();
        let mut out = vec![0.0; self.n_out];
        self.forward_cached(x, &mut cache, &mut out)?;
        Ok(out)
    }

    /// Forward pass recording what [`backward`](Self::backward) needs.
    pub fn forward_cached(&self, x: &[f64], cache: &mut LayerCache, out: &mut [f64]) -> Result<()> {
        if x.len() != self.n_in {
            return Err(Error::WidthMismatch {
                expected: self.n_in,
                got: x.len(),
            });
        }
        if out.len() != self.n_out {
            return Err(Error::WidthMismatch {
                expected: self.n_out,
                got: out.len(),
            });
        }
        let k1 = self.grid.order() + 1;
        let nb = self.grid.basis_count();
        cache.x.clear();
        cache.x.extend_from_slice(x);
        cache.start.resize(self.n_in, 0);
        cache.basis.resize(self.n_in * k1, 0.0);
        cache.dbasis.resize(self.n_in * k1, 0.0);
        cache.clamped.resize(self.n_in, false);
        cache.base.resize(self.n_in, 0.0);
        cache.dbase.resize(self.n_in, 0.0);
        for (p, &xp) in x.iter().enumerate() {
            let (b, db) = (
                &mut cache.basis[p * k1..(p + 1) * k1],
                &mut cache.dbasis[p * k1..(p + 1) * k1],
            );
            let (start, clamped) = self.grid.local_basis(xp, b, Some(db));
            cache.start[p] = start;
            cache.clamped[p] = clamped;
            let (s, ds) = silu_and_grad(xp);
            cache.base[p] = s;
            cache.dbase[p] = ds;
        }
        for (q, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for p in 0..self.n_in {
                let e = q * self.n_in + p;
                let coef = &self.coef[e * nb + cache.start[p]..][..k1];
                let b = &cache.basis[p * k1..(p + 1) * k1];
                let spline: f64 = coef.iter().zip(b).map(|(c, v)| c * v).sum();
                acc += self.w_base[e] * cache.base[p] + self.w_spline[e] * spline;
            }
            *o = acc;
        }
        Ok(())
    }

    /// Accumulates parameter gradients into `grads` and, when requested,
    /// writes the input gradient into `grad_in`. The spline term contributes
    /// no input gradient for inputs that were clamped into the grid range.
    pub fn backward(&self, cache: &LayerCache, grad_out: &[f64], grads: &mut KanLayer, grad_in: Option<&mut [f64]>) {
        let k1 = self.grid.order() + 1;
        let nb = self.grid.basis_count();
        let mut gin = grad_in;
        if let Some(g) = gin.as_deref_mut() {
            g.fill(0.0);
        }
        for (q, &g) in grad_out.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            for p in 0..self.n_in {
                let e = q * self.n_in + p;
                let off = e * nb + cache.start[p];
                let coef = &self.coef[off..off + k1];
                let b = &cache.basis[p * k1..(p + 1) * k1];
                let spline: f64 = coef.iter().zip(b).map(|(c, v)| c * v).sum();
                grads.w_base[e] += g * cache.base[p];
                grads.w_spline[e] += g * spline;
                let ws = self.w_spline[e];
                for (gc, bv) in grads.coef[off..off + k1].iter_mut().zip(b) {
                    *gc += g * ws * bv;
                }
                if let Some(gi) = gin.as_deref_mut() {
                    let mut d = self.w_base[e] * cache.dbase[p];
                    if !cache.clamped[p] {
                        let db = &cache.dbasis[p * k1..(p + 1) * k1];
                        d += ws * coef.iter().zip(db).map(|(c, v)| c * v).sum::<f64>();
                    }
                    gi[p] += g * d;
                }
            }
        }
    }
}

impl Parameters for KanLayer {
    fn groups(&self) -> Vec<&[f64]> {
        vec![&self.coef, &self.w_base, &self.w_spline]
    }

    fn groups_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.coef, &mut self.w_base, &mut self.w_spline]
    }
}

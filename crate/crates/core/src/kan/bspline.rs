use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest supported spline order.
pub const MAX_ORDER: usize = 8;

/// Uniform B-spline knot grid on `[lo, hi]`, extended by `order` knots on
/// each side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct BSplineGrid {
    order: usize,
    size: usize,
    lo: f64,
    hi: f64,
    step: f64,
    knots: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridSpec {
    order: usize,
    grid_size: usize,
    lo: f64,
    hi: f64,
}

impl TryFrom<GridSpec> for BSplineGrid {
    type Error = Error;
    fn try_from(s: GridSpec) -> Result<Self> {
        BSplineGrid::new(s.order, s.grid_size, s.lo, s.hi)
    }
}

impl From<BSplineGrid> for GridSpec {
    fn from(g: BSplineGrid) -> Self {
        GridSpec {
            order: g.order,
            grid_size: g.size,
            lo: g.lo,
            hi: g.hi,
        }
    }
}

impl Default for BSplineGrid {
    /// Cubic splines on 7 intervals over `[-1, 1]`.
    fn default() -> Self {
        Self::new(3, 7, -1.0, 1.0).expect("valid default grid")
    }
}

impl BSplineGrid {
    pub fn new(order: usize, size: usize, lo: f64, hi: f64) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::InvalidConfig(format!("spline order {order} above {MAX_ORDER}")));
        }
        if size == 0 {
            return Err(Error::InvalidConfig("grid size must be positive".into()));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidRange { lo, hi });
        }
        let knots = (0..size + 2 * order + 1)
            .map(|i| lo + (hi - lo) * (i as f64 - order as f64) / size as f64)
            .collect();
        Ok(Self {
            order,
            size,
            lo,
            hi,
            step: (hi - lo) / size as f64,
            knots,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions, `size + order`.
    pub fn basis_count(&self) -> usize {
        self.size + self.order
    }

    /// Evaluates the `order + 1` basis functions that can be non-zero at `x`
    /// (clamped into range) and optionally their derivatives.
    ///
    /// Returns the index of the first of those functions and whether `x` was
    /// clamped. `vals` and `dvals` must hold `order + 1` entries.
    pub fn local_basis(&self, x: f64, vals: &mut [f64], dvals: Option<&mut [f64]>) -> (usize, bool) {
        let k = self.order;
        let clamped = !(x >= self.lo && x <= self.hi);
        let x = if x.is_nan() { self.lo } else { x.clamp(self.lo, self.hi) };
        let cell = (((x - self.lo) / self.step).floor() as usize).min(self.size - 1);
        let span = cell + k;
        let t = &self.knots;

        let mut left = [0.0; MAX_ORDER + 1];
        let mut right = [0.0; MAX_ORDER + 1];
        let mut lower = [0.0; MAX_ORDER + 1];
        vals[0] = 1.0;
        for d in 1..=k {
            if d == k {
                lower[..k].copy_from_slice(&vals[..k]);
            }
            left[d] = x - t[span + 1 - d];
            right[d] = t[span + d] - x;
            let mut saved = 0.0;
            for r in 0..d {
                let tmp = vals[r] / (right[r + 1] + left[d - r]);
                vals[r] = saved + right[r + 1] * tmp;
                saved = left[d - r] * tmp;
            }
            vals[d] = saved;
        }
        if let Some(dv) = dvals {
            if k == 0 {
                dv[0] = 0.0;
            } else {
                let start = span - k;
                for r in 0..=k {
                    let i = start + r;
                    let a = if r >= 1 { lower[r - 1] / (t[i + k] - t[i]) } else { 0.0 };
                    let b = if r < k { lower[r] / (t[i + k + 1] - t[i + 1]) } else { 0.0 };
                    dv[r] = k as f64 * (a - b);
                }
            }
        }
        (span - k, clamped)
    }

    /// Full basis vector of length [`basis_count`](Self::basis_count).
    pub fn basis(&self, x: f64) -> Vec<f64> {
        let mut local = vec![0.0; self.order + 1];
        let (start, _) = self.local_basis(x, &mut local, None);
        let mut out = vec![0.0; self.basis_count()];
        out[start..start + self.order + 1].copy_from_slice(&local);
        out
    }

    /// Full derivative vector `dB_i/dx` at `x` (clamped into range).
    pub fn basis_derivative(&self, x: f64) -> Vec<f64> {
        let mut local = vec![0.0; self.order + 1];
        let mut dlocal = vec![0.0; self.order + 1];
        let (start, _) = self.local_basis(x, &mut local, Some(&mut dlocal));
        let mut out = vec![0.0; self.basis_count()];
        out[start..start + self.order + 1].copy_from_slice(&dlocal);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Plain recursive Cox–de Boor definition, used as an independent oracle.
    fn cox_de_boor(t: &[f64], i: usize, k: usize, x: f64, last: bool) -> f64 {
        if k == 0 {
            let inside = t[i] <= x && x < t[i + 1];
            // Close the final interval on the right so x = hi is covered.
            let at_end = last && x == t[i + 1] && t[i] < t[i + 1];
            return if inside || at_end { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let d1 = t[i + k] - t[i];
        if d1 > 0.0 {
            v += (x - t[i]) / d1 * cox_de_boor(t, i, k - 1, x, last);
        }
        let d2 = t[i + k + 1] - t[i + 1];
        if d2 > 0.0 {
            v += (t[i + k + 1] - x) / d2 * cox_de_boor(t, i + 1, k - 1, x, last);
        }
        v
    }

    #[test]
    fn shape() {
        let g = BSplineGrid::default();
        assert_eq!(g.knots().len(), 7 + 6 + 1);
        assert_eq!(g.basis_count(), 10);
        assert!(g.knots().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn linear_hats_by_hand() {
        // k = 1, G = 2 on [0, 1]: knots -0.5, 0, 0.5, 1, 1.5; three hats
        // centred at 0, 0.5, 1. At x = 0.25 the first two are 0.5 each.
        let g = BSplineGrid::new(1, 2, 0.0, 1.0).unwrap();
        let b = g.basis(0.25);
        assert_eq!(b.len(), 3);
        assert!((b[0] - 0.5).abs() < 1e-15);
        assert!((b[1] - 0.5).abs() < 1e-15);
        assert_eq!(b[2], 0.0);
        let b = g.basis(0.4);
        assert!((b[0] - 0.2).abs() < 1e-15 && (b[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn local_support_at_lo() {
        let g = BSplineGrid::default();
        let b = g.basis(-1.0);
        assert!(b[g.order() + 1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn clamping() {
        let g = BSplineGrid::default();
        assert_eq!(g.basis(-3.0), g.basis(-1.0));
        assert_eq!(g.basis(7.0), g.basis(1.0));
        let mut v = [0.0; 4];
        assert!(g.local_basis(1.5, &mut v, None).1);
        assert!(!g.local_basis(1.0, &mut v, None).1);
    }

    proptest! {
        #[test]
        fn matches_recursive_definition(x in -1.0f64..1.0, k in 0usize..5, size in 1usize..9) {
            let g = BSplineGrid::new(k, size, -1.0, 1.0).unwrap();
            let b = g.basis(x);
            for (i, v) in b.iter().enumerate() {
                let want = cox_de_boor(g.knots(), i, k, x, false);
                prop_assert!((v - want).abs() < 1e-12, "i={} got {} want {}", i, v, want);
            }
        }

        #[test]
        fn partition_of_unity(x in -1.0f64..=1.0, k in 0usize..6, size in 1usize..12) {
            let g = BSplineGrid::new(k, size, -1.0, 1.0).unwrap();
            let b = g.basis(x);
            prop_assert!(b.iter().all(|&v| v >= 0.0));
            prop_assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            if k > 0 {
                let d = g.basis_derivative(x);
                prop_assert!(d.iter().sum::<f64>().abs() < 1e-9);
            }
        }

        #[test]
        fn derivative_matches_finite_difference(x in -0.95f64..0.95, k in 1usize..5) {
            let g = BSplineGrid::new(k, 7, -1.0, 1.0).unwrap();
            let h = 1e-6;
            let d = g.basis_derivative(x);
            let (p, m) = (g.basis(x + h), g.basis(x - h));
            for i in 0..g.basis_count() {
                let fd = (p[i] - m[i]) / (2.0 * h);
                // Splines of order 1 have kinks at knots; skip those points.
                let near_knot = g.knots().iter().any(|t| (t - x).abs() < 2.0 * h);
                if !near_knot {
                    prop_assert!((d[i] - fd).abs() < 1e-5 * (1.0 + fd.abs()), "i={} {} vs {}", i, d[i], fd);
                }
            }
        }
    }
}

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::{PauliVector, C64};
use crate::{Error, Result};

/// Number of real features per pixel.
pub const FEATURE_COUNT: usize = 9;

/// 3×3 Hermitian positive semi-definite Pauli coherency matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherencyMatrix(pub [[C64; 3]; 3]);

impl Default for CoherencyMatrix {
    fn default() -> Self {
        Self::zero()
    }
}

impl CoherencyMatrix {
    pub fn zero() -> Self {
        Self([[C64::new(0.0, 0.0); 3]; 3])
    }

    pub fn from_diag(d: [f64; 3]) -> Self {
        let mut m = Self::zero();
        for (i, v) in d.into_iter().enumerate() {
            m.0[i][i] = C64::new(v, 0.0);
        }
        m
    }

    /// Rank-one coherency `k k^H`.
    pub fn outer(k: &PauliVector) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = k.0[i] * k.0[j].conj();
            }
        }
        m
    }

    /// Multi-look average `(1/n) Σ k k^H`.
    pub fn multilook(looks: &[PauliVector]) -> Result<Self> {
        if looks.is_empty() {
            return Err(Error::NoLooks);
        }
        let mut acc = Self::zero();
        for k in looks {
            acc = acc + Self::outer(k);
        }
        Ok(acc.scale(1.0 / looks.len() as f64))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[i][j]
    }

    /// Real diagonal entry.
    pub fn diag(&self, i: usize) -> f64 {
        self.0[i][i].re
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0].re + self.0[1][1].re + self.0[2][2].re
    }

    /// `Tr(T^2)`, which for a Hermitian matrix is the squared Frobenius norm.
    pub fn trace_of_square(&self) -> f64 {
        self.0.iter().flatten().map(|c| c.norm_sqr()).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|c| *c *= s);
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.trace_of_square().sqrt()
    }

    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        (*self - *other).frobenius_norm()
    }

    /// Largest deviation from Hermitian symmetry.
    pub fn hermitian_error(&self) -> f64 {
        let mut e: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                e = e.max((self.0[i][j] - self.0[j][i].conj()).norm());
            }
        }
        e
    }

    /// Checks Hermitian symmetry and positive semi-definiteness with a
    /// tolerance relative to the trace.
    pub fn validate(&self) -> Result<()> {
        let scale = self.frobenius_norm().max(f64::MIN_POSITIVE);
        let tol = 1e-9 * scale;
        if !self.0.iter().flatten().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::NotPsd);
        }
        if self.hermitian_error() > tol {
            return Err(Error::NotPsd);
        }
        let (vals, _) = self.eigen();
        if vals[2] < -tol {
            return Err(Error::NotPsd);
        }
        Ok(())
    }

    pub fn to_matrix(&self) -> Matrix3<C64> {
        Matrix3::from_fn(|i, j| self.0[i][j])
    }

    pub fn from_matrix(m: &Matrix3<C64>) -> Self {
        let mut out = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = m[(i, j)];
            }
        }
        out
    }

    /// Eigen-decomposition of the Hermitian part. Eigenvalues are returned in
    /// descending order with matching unit eigenvectors as columns
    /// (`vectors[row][col]`). Eigenvalues are not clamped.
    pub fn eigen(&self) -> ([f64; 3], [[C64; 3]; 3]) {
        let m = self.to_matrix();
        let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
        let eig = h.symmetric_eigen();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut vals = [0.0; 3];
        let mut vecs = [[C64::new(0.0, 0.0); 3]; 3];
        for (n, &src) in order.iter().enumerate() {
            vals[n] = eig.eigenvalues[src];
            for row in 0..3 {
                vecs[row][n] = eig.eigenvectors[(row, src)];
            }
        }
        (vals, vecs)
    }

    /// Flattens to `[T11, T22, T33, Re T12, Im T12, Re T13, Im T13, Re T23, Im T23]`.
    pub fn to_features(&self) -> [f64; FEATURE_COUNT] {
        let t = &self.0;
        [
            t[0][0].re,
            t[1][1].re,
            t[2][2].re,
            t[0][1].re,
            t[0][1].im,
            t[0][2].re,
            t[0][2].im,
            t[1][2].re,
            t[1][2].im,
        ]
    }

    /// Inverse of [`to_features`](Self::to_features); the lower triangle is
    /// filled by conjugation.
    pub fn from_features(f: &[f64]) -> Result<Self> {
        if f.len() != FEATURE_COUNT {
            return Err(Error::WidthMismatch {
                expected: FEATURE_COUNT,
                got: f.len(),
            });
        }
        let c = |re, im| C64::new(re, im);
        let t12 = c(f[3], f[4]);
        let t13 = c(f[5], f[6]);
        let t23 = c(f[7], f[8]);
        Ok(Self([
            [c(f[0], 0.0), t12, t13],
            [t12.conj(), c(f[1], 0.0), t23],
            [t13.conj(), t23.conj(), c(f[2], 0.0)],
        ]))
    }

    /// Lexicographic-basis second moments derived from the Pauli coherency.
    pub fn diagnostics(&self) -> CovarianceDiagnostics {
        let t = &self.0;
        let t11 = t[0][0].re;
        let t22 = t[1][1].re;
        let t12 = t[0][1];
        CovarianceDiagnostics {
            p_hh: (t11 + t22 + 2.0 * t12.re) / 2.0,
            p_vv: (t11 + t22 - 2.0 * t12.re) / 2.0,
            p_hv: t[2][2].re / 2.0,
            c_hhvv: C64::new(t11 - t22, -2.0 * t12.im) / 2.0,
        }
    }
}

impl std::ops::Add for CoherencyMatrix {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] += rhs.0[i][j];
            }
        }
        self
    }
}

impl std::ops::Sub for CoherencyMatrix {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
        self
    }
}

/// `<|S_hh|^2>`, `<|S_vv|^2>`, `<|S_hv|^2>` and `<S_hh S_vv^*>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceDiagnostics {
    pub p_hh: f64,
    pub p_vv: f64,
    pub p_hv: f64,
    pub c_hhvv: C64,
}

impl CovarianceDiagnostics {
    pub fn span(&self) -> f64 {
        self.p_hh + self.p_vv + 2.0 * self.p_hv
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polsar::ScatteringMatrix;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn empty_looks_fail() {
        assert!(matches!(CoherencyMatrix::multilook(&[]), Err(Error::NoLooks)));
    }

    #[test]
    fn diagnostics_match_direct_moments() {
        let s = [
            ScatteringMatrix::new(c(1.0, 0.2), c(0.1, -0.3), c(-0.4, 0.5)),
            ScatteringMatrix::new(c(0.3, -0.8), c(0.0, 0.2), c(0.9, 0.1)),
        ];
        let looks: Vec<_> = s.iter().map(|m| m.pauli()).collect();
        let t = CoherencyMatrix::multilook(&looks).unwrap();
        let d = t.diagnostics();
        let n = s.len() as f64;
        let p_hh = s.iter().map(|m| m.hh.norm_sqr()).sum::<f64>() / n;
        let p_vv = s.iter().map(|m| m.vv.norm_sqr()).sum::<f64>() / n;
        let p_hv = s.iter().map(|m| m.hv.norm_sqr()).sum::<f64>() / n;
        let cc = s.iter().map(|m| m.hh * m.vv.conj()).sum::<C64>() / n;
        assert!((d.p_hh - p_hh).abs() < 1e-14);
        assert!((d.p_vv - p_vv).abs() < 1e-14);
        assert!((d.p_hv - p_hv).abs() < 1e-14);
        assert!((d.c_hhvv - cc).norm() < 1e-14);
        let span = s.iter().map(|m| m.span()).sum::<f64>() / n;
        assert!((t.trace() - span).abs() < 1e-14);
    }

    #[test]
    fn feature_width_checked() {
        assert!(matches!(
            CoherencyMatrix::from_features(&[0.0; 8]),
            Err(Error::WidthMismatch { expected: 9, got: 8 })
        ));
    }

    #[test]
    fn non_psd_rejected() {
        let t = CoherencyMatrix::from_diag([1.0, -0.5, 0.2]);
        assert!(t.validate().is_err());
        assert!(CoherencyMatrix::from_diag([1.0, 0.5, 0.0]).validate().is_ok());
    }

    fn arb_scattering() -> impl Strategy<Value = ScatteringMatrix> {
        prop::array::uniform6(-3.0f64..3.0)
            .prop_map(|v| ScatteringMatrix::new(c(v[0], v[1]), c(v[2], v[3]), c(v[4], v[5])))
    }

    proptest! {
        #[test]
        fn multilook_is_hermitian_psd_with_span_trace(s in prop::collection::vec(arb_scattering(), 1..6)) {
            let looks: Vec<_> = s.iter().map(|m| m.pauli()).collect();
            let t = CoherencyMatrix::multilook(&looks).unwrap();
            let span = s.iter().map(|m| m.span()).sum::<f64>() / s.len() as f64;
            prop_assert!((t.trace() - span).abs() <= 1e-12 * span.max(1.0));
            prop_assert!(t.hermitian_error() <= 1e-14 * span.max(1.0));
            let (vals, _) = t.eigen();
            prop_assert!(vals[2] >= -1e-12 * span.max(1.0));
        }

        #[test]
        fn features_round_trip_exactly(v in prop::array::uniform9(-1e3f64..1e3)) {
            let t = CoherencyMatrix::from_features(&v).unwrap();
            prop_assert_eq!(t.to_features(), v);
            let t2 = CoherencyMatrix::from_features(&t.to_features()).unwrap();
            prop_assert_eq!(t, t2);
        }
    }
}

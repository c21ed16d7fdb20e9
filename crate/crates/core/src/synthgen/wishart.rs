use nalgebra::{Cholesky, Matrix3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::polsar::{CoherencyMatrix, C64};
use crate::{Error, Result};

/// Lower-triangular `A` with `A A^H = T` (up to a tiny diagonal jitter for
/// semi-definite `T`), reusable across many draws.
#[derive(Debug, Clone)]
pub struct HermitianFactor {
    lower: Matrix3<C64>,
}

impl HermitianFactor {
    pub fn new(t: &CoherencyMatrix) -> Result<Self> {
        t.validate()?;
        let trace = t.trace();
        if trace == 0.0 && t.frobenius_norm() == 0.0 {
            return Ok(Self {
                lower: Matrix3::zeros(),
            });
        }
        let jitter = 1e-12 * trace.abs();
        let m = t.to_matrix() + Matrix3::from_diagonal_element(C64::new(jitter, 0.0));
        let chol = Cholesky::new(m).ok_or(Error::NotPsd)?;
        Ok(Self { lower: chol.l() })
    }

    /// Multi-look coherency from `looks` circular complex Gaussian draws.
    pub fn sample<R: Rng + ?Sized>(&self, looks: usize, rng: &mut R) -> Result<CoherencyMatrix> {
        if looks == 0 {
            return Err(Error::NoLooks);
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut acc = Matrix3::<C64>::zeros();
        for _ in 0..looks {
            let z = Vector3::from_fn(|_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                C64::new(re * s, im * s)
            });
            let k = self.lower * z;
            acc += k * k.adjoint();
        }
        let mut out = CoherencyMatrix::from_matrix(&(acc / C64::new(looks as f64, 0.0)));
        for i in 0..3 {
            out.0[i][i].im = 0.0;
        }
        Ok(out)
    }
}

/// Draws one `looks`-look complex Wishart coherency with mean `t`.
pub fn sample_wishart<R: Rng + ?Sized>(
    t: &CoherencyMatrix,
    looks: usize,
    rng: &mut R,
) -> Result<CoherencyMatrix> {
    HermitianFactor::new(t)?.sample(looks, rng)
}

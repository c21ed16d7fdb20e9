use serde::{Deserialize, Serialize};

use crate::polsar::{CovarianceDiagnostics, C64};

/// Three-component model-based power decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreemanDurden {
    pub ps: f64,
    pub pd: f64,
    pub pv: f64,
    pub fs: f64,
    pub fd: f64,
    pub fv: f64,
    /// Double-bounce parameter; fixed to −1 on the surface-dominant branch.
    pub alpha: C64,
    /// Surface parameter; fixed to 1 on the double-bounce-dominant branch.
    pub beta: C64,
    /// Set when any model power had to be clamped at zero.
    pub clamped: bool,
}

impl FreemanDurden {
    pub fn total(&self) -> f64 {
        self.ps + self.pd + self.pv
    }

    /// `(P_S, P_D, P_v)` normalised to sum to one. Returns `None` when all
    /// powers vanish.
    pub fn proportions(&self) -> Option<[f64; 3]> {
        let t = self.total();
        (t > 0.0).then(|| [self.ps / t, self.pd / t, self.pv / t])
    }
}

const TINY: f64 = 1e-300;

pub fn freeman_durden(d: &CovarianceDiagnostics) -> FreemanDurden {
    let fv = 3.0 * d.p_hv;
    let pv = 8.0 * fv / 3.0;
    let mut clamped = false;
    let mut a = d.p_hh - fv;
    let mut b = d.p_vv - fv;
    let c = d.c_hhvv - fv / 3.0;
    if a < 0.0 {
        a = 0.0;
        clamped = true;
    }
    if b < 0.0 {
        b = 0.0;
        clamped = true;
    }
    let scale = (a + b).max(TINY);
    let det = a * b - c.norm_sqr();

    let (mut fs, mut fd, alpha, beta);
    if c.re >= 0.0 {
        alpha = C64::new(-1.0, 0.0);
        let den = a + b + 2.0 * c.re;
        fd = if den > 1e-12 * scale { det / den } else { 0.0 };
        if fd < 0.0 {
            fd = 0.0;
            clamped = true;
        }
        fs = b - fd;
        if fs < 0.0 {
            fs = 0.0;
            clamped = true;
        }
        beta = if fs > 1e-12 * scale { (c + fd) / fs } else { C64::new(0.0, 0.0) };
    } else {
        beta = C64::new(1.0, 0.0);
        let den = a + b - 2.0 * c.re;
        fs = if den > 1e-12 * scale { det / den } else { 0.0 };
        if fs < 0.0 {
            fs = 0.0;
            clamped = true;
        }
        fd = b - fs;
        if fd < 0.0 {
            fd = 0.0;
            clamped = true;
        }
        alpha = if fd > 1e-12 * scale { (c - fs) / fd } else { C64::new(0.0, 0.0) };
    }
    FreemanDurden {
        ps: fs * (1.0 + beta.norm_sqr()),
        pd: fd * (1.0 + alpha.norm_sqr()),
        pv,
        fs,
        fd,
        fv,
        alpha,
        beta,
        clamped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(p_hh: f64, p_vv: f64, p_hv: f64, c: C64) -> CovarianceDiagnostics {
        CovarianceDiagnostics { p_hh, p_vv, p_hv, c_hhvv: c }
    }

    #[test]
    fn trihedral() {
        let r = freeman_durden(&diag(1.0, 1.0, 0.0, C64::new(1.0, 0.0)));
        assert_eq!((r.ps, r.pd, r.pv), (2.0, 0.0, 0.0));
        assert_eq!(r.alpha, C64::new(-1.0, 0.0));
        assert_eq!(r.beta, C64::new(1.0, 0.0));
        assert!(!r.clamped);
    }

    #[test]
    fn dihedral() {
        let r = freeman_durden(&diag(1.0, 1.0, 0.0, C64::new(-1.0, 0.0)));
        assert_eq!((r.ps, r.pd, r.pv), (0.0, 2.0, 0.0));
        assert_eq!(r.beta, C64::new(1.0, 0.0));
        assert_eq!(r.alpha, C64::new(-1.0, 0.0));
        assert!(!r.clamped);
    }

    #[test]
    fn pure_volume() {
        let r = freeman_durden(&diag(3.0, 3.0, 1.0, C64::new(1.0, 0.0)));
        assert_eq!((r.ps, r.pd, r.pv), (0.0, 0.0, 8.0));
    }

    #[test]
    fn excess_cross_pol_is_clamped() {
        let r = freeman_durden(&diag(0.5, 0.5, 1.0, C64::new(0.1, 0.0)));
        assert!(r.clamped);
        assert!(r.ps >= 0.0 && r.pd >= 0.0);
    }
}

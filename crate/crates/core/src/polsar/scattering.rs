use super::C64;

/// Monostatic backscattering matrix under reciprocity (`S_hv == S_vh`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringMatrix {
    pub hh: C64,
    pub hv: C64,
    pub vv: C64,
}

impl ScatteringMatrix {
    pub fn new(hh: C64, hv: C64, vv: C64) -> Self {
        Self { hh, hv, vv }
    }

    /// Total backscattered power `|S_hh|^2 + 2|S_hv|^2 + |S_vv|^2`.
    pub fn span(&self) -> f64 {
        self.hh.norm_sqr() + 2.0 * self.hv.norm_sqr() + self.vv.norm_sqr()
    }

    pub fn pauli(&self) -> PauliVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PauliVector([
            (self.hh + self.vv) * s,
            (self.hh - self.vv) * s,
            self.hv * (2.0 * s),
        ])
    }
}

/// Pauli target vector `(S_hh + S_vv, S_hh - S_vv, 2 S_hv) / sqrt(2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliVector(pub [C64; 3]);

impl PauliVector {
    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn to_scattering(&self) -> ScatteringMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let [a, b, c] = self.0;
        ScatteringMatrix {
            hh: (a + b) * s,
            vv: (a - b) * s,
            hv: c * s,
        }
    }
}

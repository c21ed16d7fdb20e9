use serde::{Deserialize, Serialize};

use crate::polsar::{CoherencyMatrix, C64};

/// The nine Huynen target parameters.
///
/// `h` is Huynen's H parameter, unrelated to polarimetric entropy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Huynen {
    pub a0: f64,
    pub b0: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub h: f64,
}

impl Huynen {
    pub fn to_array(&self) -> [f64; 9] {
        [self.a0, self.b0, self.b, self.c, self.d, self.e, self.f, self.g, self.h]
    }

    pub const NAMES: [&'static str; 9] = ["A0", "B0", "B", "C", "D", "E", "F", "G", "H"];
}

pub fn huynen(t: &CoherencyMatrix) -> Huynen {
    let m = &t.0;
    Huynen {
        a0: m[0][0].re / 2.0,
        b0: (m[1][1].re + m[2][2].re) / 2.0,
        b: (m[1][1].re - m[2][2].re) / 2.0,
        c: m[0][1].re,
        d: -m[0][1].im,
        h: m[0][2].re,
        g: m[0][2].im,
        e: m[1][2].re,
        f: -m[1][2].im,
    }
}

/// Rebuilds the coherency matrix from Huynen parameters.
pub fn huynen_to_t(p: &Huynen) -> CoherencyMatrix {
    let t12 = C64::new(p.c, -p.d);
    let t13 = C64::new(p.h, p.g);
    let t23 = C64::new(p.e, -p.f);
    CoherencyMatrix([
        [C64::new(2.0 * p.a0, 0.0), t12, t13],
        [t12.conj(), C64::new(p.b0 + p.b, 0.0), t23],
        [t13.conj(), t23.conj(), C64::new(p.b0 - p.b, 0.0)],
    ])
}

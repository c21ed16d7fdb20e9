use serde::{Deserialize, Serialize};

use super::{ConceptGroup, ConceptVector, CONCEPT_COUNT};
use crate::polsar::{CoherencyMatrix, CovarianceDiagnostics};
use crate::ptd::{cloude_pottier, freeman_durden, huynen, CloudePottier, FreemanDurden, Huynen};
use crate::{Error, Result};

const DOMINANT_MIN: f64 = 0.4;
const DOMINANT_GAP: f64 = 0.1;
const SECONDARY_RATIO: f64 = 0.5;
const REGULAR_RATIO: f64 = 2.0;
const IRREGULAR_RATIO: f64 = 0.5;
const SYMMETRIC_BELOW: f64 = 0.1;
const ASYMMETRIC_FROM: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dominance {
    Dominant,
    Secondary,
    Weak,
}

impl Dominance {
    fn offset(self) -> usize {
        match self {
            Dominance::Dominant => 0,
            Dominance::Secondary => 1,
            Dominance::Weak => 2,
        }
    }
}

/// Labels surface / double-bounce / volume proportions.
///
/// The largest component (ties resolved surface, then double-bounce, then
/// volume) is dominant when it is at least 0.4 and leads the runner-up by at
/// least 0.1, otherwise secondary. Every other component is secondary when it
/// reaches half of the largest, otherwise weak.
pub fn dominance_labels(p: [f64; 3]) -> Result<[Dominance; 3]> {
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidSimplex(format!("{p:?}")));
    }
    if (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidSimplex(format!("{p:?} does not sum to 1")));
    }
    let mut max_i = 0;
    for i in 1..3 {
        if p[i] > p[max_i] {
            max_i = i;
        }
    }
    let p_max = p[max_i];
    let runner_up = (0..3).filter(|&i| i != max_i).map(|i| p[i]).fold(f64::MIN, f64::max);
    let mut out = [Dominance::Weak; 3];
    for i in 0..3 {
        out[i] = if i == max_i {
            if p_max >= DOMINANT_MIN && p_max - runner_up >= DOMINANT_GAP {
                Dominance::Dominant
            } else {
                Dominance::Secondary
            }
        } else if p[i] >= SECONDARY_RATIO * p_max {
            Dominance::Secondary
        } else {
            Dominance::Weak
        };
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tertile {
    Low,
    Middle,
    High,
}

impl Tertile {
    fn offset(self) -> usize {
        match self {
            Tertile::Low => 0,
            Tertile::Middle => 1,
            Tertile::High => 2,
        }
    }
}

/// Bins `x` (clamped into `[lo, hi]`) into three equal-width intervals, each
/// closed on the left; the top interval also includes `hi`.
pub fn tertile_bin(x: f64, lo: f64, hi: f64) -> Result<Tertile> {
    if !(lo < hi) {
        return Err(Error::InvalidRange { lo, hi });
    }
    let x = x.clamp(lo, hi);
    let r = (hi - lo) / 3.0;
    Ok(if x < lo + r {
        Tertile::Low
    } else if x < lo + 2.0 * r {
        Tertile::Middle
    } else {
        Tertile::High
    })
}

/// Barakat degree of polarimetric purity `sqrt((3 Tr(T²)/Tr(T)² − 1) / 2)`.
pub fn degree_of_polarization(t: &CoherencyMatrix) -> Result<f64> {
    let tr = t.trace();
    if !(tr > 0.0) {
        return Err(Error::NullTarget);
    }
    let p2 = (3.0 * t.trace_of_square() / (tr * tr) - 1.0) / 2.0;
    Ok(p2.max(0.0).sqrt().min(1.0))
}

/// Scene-level span thresholds splitting scattering power into terciles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanTerciles {
    pub lower: f64,
    pub upper: f64,
}

impl SpanTerciles {
    /// Linear-interpolated 1/3 and 2/3 quantiles of `spans`.
    pub fn from_spans(spans: &[f64]) -> Result<Self> {
        if spans.is_empty() {
            return Err(Error::EmptyData);
        }
        let mut s = spans.to_vec();
        s.sort_by(f64::total_cmp);
        let q = |f: f64| {
            let pos = f * (s.len() - 1) as f64;
            let i = pos.floor() as usize;
            let frac = pos - i as f64;
            if i + 1 < s.len() {
                s[i] + frac * (s[i + 1] - s[i])
            } else {
                s[i]
            }
        };
        Ok(Self {
            lower: q(1.0 / 3.0),
            upper: q(2.0 / 3.0),
        })
    }

    pub fn bin(&self, span: f64) -> Tertile {
        if span < self.lower {
            Tertile::Low
        } else if span < self.upper {
            Tertile::Middle
        } else {
            Tertile::High
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolarizationMode {
    Horizontal,
    Vertical,
    Cross,
}

/// Scalars used by the concept rules that are not direct decomposition outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedScalars {
    pub dop: f64,
    pub pol_mode: PolarizationMode,
    /// `A0 / B0`; infinite when `B0` is zero.
    pub regularity_ratio: f64,
    /// `(|F| + |G|) / (span / 2)`.
    pub asymmetry: f64,
}

pub fn derived_scalars(
    cp: &CloudePottier,
    hy: &Huynen,
    diag: &CovarianceDiagnostics,
) -> DerivedScalars {
    let powers = [diag.p_hh, diag.p_vv, 2.0 * diag.p_hv];
    let mut mode = 0;
    for i in 1..3 {
        if powers[i] > powers[mode] {
            mode = i;
        }
    }
    let pol_mode = [
        PolarizationMode::Horizontal,
        PolarizationMode::Vertical,
        PolarizationMode::Cross,
    ][mode];
    let regularity_ratio = if hy.b0 > 0.0 { hy.a0 / hy.b0 } else { f64::INFINITY };
    let span = diag.span();
    let asymmetry = if span > 0.0 {
        (hy.f.abs() + hy.g.abs()) / (span / 2.0)
    } else {
        0.0
    };
    DerivedScalars {
        dop: cp.degree_of_polarization(),
        pol_mode,
        regularity_ratio,
        asymmetry,
    }
}

/// Applies every concept rule to one set of statistics.
pub fn build_concepts(
    cp: &CloudePottier,
    fd: &FreemanDurden,
    hy: &Huynen,
    diag: &CovarianceDiagnostics,
    terciles: &SpanTerciles,
) -> Result<ConceptVector> {
    let mut v = [0.0; CONCEPT_COUNT];
    let mut set = |group: ConceptGroup, offset: usize| v[group.range().start + offset] = 1.0;

    let props = fd.proportions().ok_or(Error::NullTarget)?;
    let dom = dominance_labels(props)?;
    for (mech, state) in dom.iter().enumerate() {
        set(ConceptGroup::ScatteringDominance, mech * 3 + state.offset());
    }

    let ds = derived_scalars(cp, hy, diag);
    let mode = match ds.pol_mode {
        PolarizationMode::Horizontal => 0,
        PolarizationMode::Vertical => 1,
        PolarizationMode::Cross => 2,
    };
    set(ConceptGroup::PolarizationMode, mode);
    set(ConceptGroup::DegreeOfPolarization, tertile_bin(ds.dop, 0.0, 1.0)?.offset());
    set(ConceptGroup::Entropy, tertile_bin(cp.entropy, 0.0, 1.0)?.offset());
    set(ConceptGroup::Anisotropy, tertile_bin(cp.anisotropy, 0.0, 1.0)?.offset());
    set(ConceptGroup::ScatteringAngle, tertile_bin(cp.alpha_bar, 0.0, 90.0)?.offset());

    let regularity = if ds.regularity_ratio >= REGULAR_RATIO {
        0
    } else if ds.regularity_ratio >= IRREGULAR_RATIO {
        1
    } else {
        2
    };
    set(ConceptGroup::Regularity, regularity);
    set(ConceptGroup::ScatteringPower, terciles.bin(diag.span()).offset());
    let symmetry = if ds.asymmetry < SYMMETRIC_BELOW {
        0
    } else if ds.asymmetry < ASYMMETRIC_FROM {
        1
    } else {
        2
    };
    set(ConceptGroup::Symmetry, symmetry);
    ConceptVector::new(v.to_vec())
}

/// Runs all three decompositions on `t` and builds its concept vector.
pub fn concepts_for_coherency(t: &CoherencyMatrix, terciles: &SpanTerciles) -> Result<ConceptVector> {
    let cp = cloude_pottier(t)?;
    let diag = t.diagnostics();
    let fd = freeman_durden(&diag);
    let hy = huynen(t);
    build_concepts(&cp, &fd, &hy, &diag, terciles)
}

use serde::{Deserialize, Serialize};

use crate::concepts::{concepts_for_coherency, ClassConceptTable, ClassConcepts, ConceptVector, SpanTerciles};
use crate::polsar::{CoherencyMatrix, PauliVector, PrototypeDescriptor, C64};
use crate::{Error, Result};

/// Unit-trace surface, double-bounce and volume coherency matrices.
pub fn canonical_components() -> [CoherencyMatrix; 3] {
    let rank_one = |a: f64, b: f64| {
        let n = (a * a + b * b).sqrt();
        let k = PauliVector([C64::new(a / n, 0.0), C64::new(b / n, 0.0), C64::new(0.0, 0.0)]);
        CoherencyMatrix::outer(&k)
    };
    [
        rank_one(1.0, 0.3),
        rank_one(0.3, 1.0),
        CoherencyMatrix::from_diag([0.5, 0.25, 0.25]),
    ]
}

/// User-facing description of a class: mixture weights and power scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeSpec {
    pub name: String,
    /// Surface, double-bounce, volume weights summing to one.
    pub weights: [f64; 3],
    pub span_scale: f64,
}

impl PrototypeSpec {
    pub fn new(name: &str, weights: [f64; 3], span_scale: f64) -> Self {
        Self {
            name: name.to_string(),
            weights,
            span_scale,
        }
    }

    fn validate(&self) -> Result<()> {
        let sum: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSimplex(format!("weights of {}", self.name)));
        }
        if !(self.span_scale > 0.0 && self.span_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!("span scale of {}", self.name)));
        }
        Ok(())
    }

    pub fn coherency(&self) -> CoherencyMatrix {
        let [s, d, v] = canonical_components();
        let [ws, wd, wv] = self.weights;
        (s.scale(ws) + d.scale(wd) + v.scale(wv)).scale(self.span_scale)
    }
}

/// A class with its noise-free coherency and derived concept vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPrototype {
    pub spec: PrototypeSpec,
    pub coherency: CoherencyMatrix,
    pub concepts: ConceptVector,
}

impl ClassPrototype {
    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn span(&self) -> f64 {
        self.coherency.trace()
    }

    pub fn descriptor(&self) -> PrototypeDescriptor {
        PrototypeDescriptor {
            name: self.spec.name.clone(),
            weights: self.spec.weights,
            span_scale: self.spec.span_scale,
            coherency: self.coherency.to_features(),
            concepts: self.concepts.values().iter().map(|&v| v as u8).collect(),
        }
    }
}

/// Builds prototypes and their concept vectors. Scattering-power terciles are
/// taken over the prototype spans. Fails when two classes end up with the
/// same concept vector.
pub fn build_prototypes(specs: &[PrototypeSpec]) -> Result<Vec<ClassPrototype>> {
    if specs.is_empty() {
        return Err(Error::EmptyData);
    }
    if specs.len() >= crate::polsar::UNLABELED as usize {
        return Err(Error::InvalidConfig("too many classes".into()));
    }
    for s in specs {
        s.validate()?;
    }
    let coherencies: Vec<_> = specs.iter().map(PrototypeSpec::coherency).collect();
    let spans: Vec<f64> = coherencies.iter().map(CoherencyMatrix::trace).collect();
    let terciles = SpanTerciles::from_spans(&spans)?;
    let protos = specs
        .iter()
        .zip(coherencies)
        .map(|(spec, coherency)| {
            Ok(ClassPrototype {
                spec: spec.clone(),
                concepts: concepts_for_coherency(&coherency, &terciles)?,
                coherency,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    class_table(&protos)?;
    Ok(protos)
}

pub fn class_table(protos: &[ClassPrototype]) -> Result<ClassConceptTable> {
    ClassConceptTable::new(
        protos
            .iter()
            .map(|p| ClassConcepts {
                name: p.spec.name.clone(),
                concepts: p.concepts.clone(),
            })
            .collect(),
    )
}

/// Six terrain classes with mixtures tuned so that the dominance labels of the
/// noise-free prototypes follow the intended terrain descriptions.
pub fn default_prototype_specs() -> Vec<PrototypeSpec> {
    vec![
        PrototypeSpec::new("Water", [0.90, 0.05, 0.05], 1.0),
        PrototypeSpec::new("Mountain", [0.21, 0.19, 0.60], 0.3),
        PrototypeSpec::new("Vegetation", [0.32, 0.31, 0.37], 0.4),
        PrototypeSpec::new("High-Density Urban", [0.44, 0.42, 0.14], 1.5),
        PrototypeSpec::new("Low-Density Urban", [0.305, 0.315, 0.38], 2.5),
        PrototypeSpec::new("Developed", [0.25, 0.45, 0.30], 3.0),
    ]
}

pub fn default_prototypes() -> Result<Vec<ClassPrototype>> {
    build_prototypes(&default_prototype_specs())
}

use serde::{Deserialize, Serialize};

use super::{ConceptGroup, CONCEPT_COUNT};
use crate::{Error, Result};

/// Activations over the concept vocabulary, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ConceptVector(Vec<f64>);

impl ConceptVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != CONCEPT_COUNT {
            return Err(Error::WidthMismatch {
                expected: CONCEPT_COUNT,
                got: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidConfig(format!("concept value {v} outside [0, 1]")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Checks the ground-truth layout: binary values, one state per mechanism
    /// in the dominance group and at most one active entry in every other group.
    pub fn check_ground_truth(&self) -> Result<()> {
        if self.0.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidConfig("ground-truth concepts must be binary".into()));
        }
        for group in ConceptGroup::ALL {
            let r = group.range();
            let slice = &self.0[r];
            if group == ConceptGroup::ScatteringDominance {
                for mech in slice.chunks(3) {
                    if mech.iter().sum::<f64>() != 1.0 {
                        return Err(Error::InvalidConfig(
                            "each mechanism needs exactly one dominance state".into(),
                        ));
                    }
                }
            } else if slice.iter().sum::<f64>() > 1.0 {
                return Err(Error::InvalidConfig(format!("group {group:?} has several active concepts")));
            }
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for ConceptVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ConceptVector> for Vec<f64> {
    fn from(v: ConceptVector) -> Self {
        v.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassConcepts {
    pub name: String,
    pub concepts: ConceptVector,
}

/// Class-level concept supervision: one ground-truth vector per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ClassConcepts>", into = "Vec<ClassConcepts>")]
pub struct ClassConceptTable(Vec<ClassConcepts>);

impl ClassConceptTable {
    /// Validates every row and rejects tables in which two classes share a
    /// concept vector.
    pub fn new(rows: Vec<ClassConcepts>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyData);
        }
        for r in &rows {
            r.concepts.check_ground_truth()?;
        }
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                if rows[i].concepts == rows[j].concepts {
                    return Err(Error::InvalidConfig(format!(
                        "classes {} and {} have identical concept vectors",
                        rows[i].name, rows[j].name
                    )));
                }
            }
        }
        Ok(Self(rows))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn rows(&self) -> &[ClassConcepts] {
        &self.0
    }

    pub fn class_names(&self) -> Vec<String> {
        self.0.iter().map(|r| r.name.clone()).collect()
    }

    pub fn concepts_for_class(&self, y: usize) -> Result<&ConceptVector> {
        self.0.get(y).map(|r| &r.concepts).ok_or(Error::UnknownClass(y))
    }
}

impl TryFrom<Vec<ClassConcepts>> for ClassConceptTable {
    type Error = Error;
    fn try_from(v: Vec<ClassConcepts>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ClassConceptTable> for Vec<ClassConcepts> {
    fn from(t: ClassConceptTable) -> Self {
        t.0
    }
}

//! The fixed polarimetric concept vocabulary and the rules that derive binary
//! concept vectors from decomposition outputs.

mod rules;
mod table;
mod vocab;

pub use rules::{
    build_concepts, concepts_for_coherency, degree_of_polarization, derived_scalars,
    dominance_labels, tertile_bin, Dominance, DerivedScalars, PolarizationMode, SpanTerciles,
    Tertile,
};
pub use table::{ClassConceptTable, ClassConcepts, ConceptVector};
pub use vocab::{vocabulary, ConceptGroup, ConceptInfo, CONCEPT_COUNT};

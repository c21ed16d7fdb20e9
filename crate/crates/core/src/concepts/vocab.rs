use serde::{Deserialize, Serialize};

/// Number of concepts in the vocabulary.
pub const CONCEPT_COUNT: usize = 33;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConceptGroup {
    ScatteringDominance,
    PolarizationMode,
    DegreeOfPolarization,
    Entropy,
    Anisotropy,
    ScatteringAngle,
    Regularity,
    ScatteringPower,
    Symmetry,
}

impl ConceptGroup {
    pub const ALL: [ConceptGroup; 9] = [
        ConceptGroup::ScatteringDominance,
        ConceptGroup::PolarizationMode,
        ConceptGroup::DegreeOfPolarization,
        ConceptGroup::Entropy,
        ConceptGroup::Anisotropy,
        ConceptGroup::ScatteringAngle,
        ConceptGroup::Regularity,
        ConceptGroup::ScatteringPower,
        ConceptGroup::Symmetry,
    ];

    /// Index range of the group inside the vocabulary.
    pub fn range(self) -> std::ops::Range<usize> {
        match self {
            ConceptGroup::ScatteringDominance => 0..9,
            ConceptGroup::PolarizationMode => 9..12,
            ConceptGroup::DegreeOfPolarization => 12..15,
            ConceptGroup::Entropy => 15..18,
            ConceptGroup::Anisotropy => 18..21,
            ConceptGroup::ScatteringAngle => 21..24,
            ConceptGroup::Regularity => 24..27,
            ConceptGroup::ScatteringPower => 27..30,
            ConceptGroup::Symmetry => 30..33,
        }
    }
}

/// One vocabulary entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptInfo {
    pub index: usize,
    pub group: ConceptGroup,
    pub name: String,
}

const NAMES: [&str; CONCEPT_COUNT] = [
    "surface scattering dominant",
    "secondary surface scattering",
    "weak surface scattering",
    "double-bounce scattering dominant",
    "secondary double-bounce scattering",
    "weak double-bounce scattering",
    "volume scattering dominant",
    "secondary volume scattering",
    "weak volume scattering",
    "horizontal polarization dominant",
    "vertical polarization dominant",
    "cross polarization dominant",
    "low degree of polarization",
    "medium degree of polarization",
    "high degree of polarization",
    "low polarization entropy",
    "medium polarization entropy",
    "high polarization entropy",
    "low anisotropy",
    "medium anisotropy",
    "high anisotropy",
    "small scattering angle",
    "medium scattering angle",
    "large scattering angle",
    "highly regular target",
    "regular and irregular parts equivalent",
    "irregular target",
    "low scattering power",
    "medium scattering power",
    "high scattering power",
    "high symmetry",
    "medium symmetry",
    "asymmetric target",
];

/// The vocabulary in its fixed order.
pub fn vocabulary() -> Vec<ConceptInfo> {
    ConceptGroup::ALL
        .iter()
        .flat_map(|&g| g.range().map(move |i| (g, i)))
        .map(|(group, index)| ConceptInfo {
            index,
            group,
            name: NAMES[index].to_string(),
        })
        .collect()
}

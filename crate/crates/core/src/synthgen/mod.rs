//! Synthetic PolSAR scenes: class prototypes built from canonical scattering
//! mechanisms, complex Wishart speckle and rectangular layouts.

mod oracle;
mod prototypes;
mod scene_gen;
mod wishart;

pub use oracle::{nearest_prototype_accuracy, OracleReport, OracleRule};
pub use prototypes::{
    build_prototypes, canonical_components, class_table, default_prototype_specs,
    default_prototypes, ClassPrototype, PrototypeSpec,
};
pub use scene_gen::{generate_scene, Region, SceneSpec};
pub use wishart::{sample_wishart, HermitianFactor};

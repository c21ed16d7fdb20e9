//! Polarimetric representations: scattering matrices, Pauli vectors, coherency
//! matrices, scenes and patches.

mod coherency;
mod io;
mod rgb;
mod scattering;
mod scene;

pub use coherency::{CoherencyMatrix, CovarianceDiagnostics, FEATURE_COUNT};
pub use io::{read_scene, write_scene, PrototypeDescriptor, SceneMeta, SCENE_VERSION};
pub use rgb::pauli_rgb;
pub use scattering::{PauliVector, ScatteringMatrix};
pub use scene::{Patch, Scene, PATCH_HALF, PATCH_SIZE, UNLABELED};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

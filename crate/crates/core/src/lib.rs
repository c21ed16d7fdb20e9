//! Interpretable PolSAR classification through polarimetric concept bottlenecks.
//!
//! The crate is organised bottom-up:
//!
//! - [`polsar`]: scattering / Pauli / coherency representations, scenes, patches
//!   and the `PSCENE v1` on-disk format.
//! - [`ptd`]: Cloude–Pottier, Freeman–Durden and Huynen target decompositions.
//! - [`concepts`]: the fixed 33-entry concept vocabulary and the rules that turn
//!   decomposition outputs into binary concept vectors.
//! - [`synthgen`]: class prototypes, complex Wishart speckle and scene generation.
//! - [`kan`]: B-spline Kolmogorov–Arnold layers with analytic gradients and
//!   symbolic formula extraction.
//! - [`pacbm`]: the parallel concept bottleneck model, its three training
//!   strategies, metrics, intervention and the `PACBM v1` checkpoint format.
//!
//! Data-parallel loops go through [`par::Exec`]; with the `parallel` feature
//! disabled every loop runs sequentially and produces bit-identical results.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod concepts;
pub mod error;
pub mod kan;
pub mod optim;
pub mod pacbm;
pub mod par;
pub mod polsar;
pub mod ptd;
pub mod rng;
pub mod synthgen;

pub use error::{Error, Result};

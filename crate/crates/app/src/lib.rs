//! CLI and HTTP service over the `polcbm` library.

pub mod analysis;
pub mod api;
pub mod cli;
pub mod error;
pub mod explain;
pub mod manifest;
pub mod view;

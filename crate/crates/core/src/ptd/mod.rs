//! Polarimetric target decompositions.

mod cloude;
mod freeman;
mod huynen;

pub use cloude::{cloude_pottier, CloudePottier};
pub use freeman::{freeman_durden, FreemanDurden};
pub use huynen::{huynen, huynen_to_t, Huynen};

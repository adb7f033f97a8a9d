//! Gabor frame conditions on `αℤ × βℤ` from the second moment of window periodizations.

// `!(x > 0.0)` is the NaN-rejecting guard throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod error;
pub mod frameset;
pub mod lattice;
pub mod sampling;
pub mod special;
pub mod window;

pub use error::{Error, Result};
pub use lattice::{LatticeOpts, Side};
pub use window::{Window, WindowKind};

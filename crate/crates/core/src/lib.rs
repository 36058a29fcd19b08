//! Linearized electrical impedance tomography on the unit disk.
//!
//! The crate synthesizes Neumann-to-Dirichlet difference data with a P1
//! finite-element solver ([`fem`], [`ntd`]), derives per-pixel upper bounds
//! from the monotonicity test ([`monotonicity`]), and reconstructs inclusion
//! shapes by minimizing the linearized residual under those box constraints
//! ([`solver`]). Matrix functions of symmetric matrices live in [`matfun`].

pub mod error;
pub mod fem;
pub mod geometry;
pub mod matfun;
pub mod monotonicity;
pub mod ntd;
pub mod solver;

pub use error::{Error, Result};

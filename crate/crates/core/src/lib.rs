//! Numerical laboratory for spectral inequalities of Schrödinger operators
//! `H = -Δ + V` with confining potentials.
//!
//! The crate discretises `H` on a Dirichlet box, harvests the low spectrum and
//! uses it to measure eigenfunction decay, the sharp constant of the spectral
//! inequality on sensor sets, the ghost-dimension extension and the
//! observability constant of the heat semigroup `e^{t(Δ - V)}`.

mod blob;
pub mod control;
pub mod decay;
pub mod error;
pub mod ghost;
pub mod model;
pub mod numerics;
pub mod sensors;
pub mod specineq;

pub use error::{Error, Result};

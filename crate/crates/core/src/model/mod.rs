//! Potentials, grids, the discrete Hamiltonian and its low spectrum.

mod build;
mod counting;
mod eigensystem;
mod grid;
mod hamiltonian;
mod potential;

pub use build::build_eigensystem;
pub use counting::{counting_bound, localization_halfwidth};
pub use eigensystem::{eigendecompose, tensor_compose, Basis, EigenConfig, Eigensystem, SpectralSubspace, TensorBasis};
pub use grid::Grid;
pub use hamiltonian::{assemble, assemble_sampled, sample_potential, Hamiltonian};
pub use potential::{GrowthParams, PotentialKind, PotentialSpec, Sampler};

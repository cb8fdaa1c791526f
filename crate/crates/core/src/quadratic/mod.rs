//! Truncated Jordan–Wigner (Bogoliubov–de Gennes) description of the chain.
//!
//! Replacing the Jordan–Wigner strings by unity turns every σˣσˣ pair into a
//! fermion bilinear. In momentum space this gives ξ_k = 2g − 2C_k and
//! Δ_k = 2S_k; in real space an L-site open chain is described by a hopping
//! matrix A and a pairing matrix B, and all single-particle energies are the
//! singular values of M = A − B.

pub mod dynamics;
pub mod momentum;
pub mod realspace;

pub use dynamics::{
    bond_entropies, bond_entropy, entropy_field, evolve_perturbation, BlackmanHarrisWindow, CorrelationState, DriveProtocol,
    EntropyField, Trajectory,
};
pub use momentum::{critical_field, default_k_grid, dispersion, expanded_energy, geometric, meanfield_energy, meanfield_z, BdgMomentumModel, DispersionPoint};
pub use realspace::{finite_gap, parity_conserving_gap, pseudocritical_field, BdgRealSpaceModel, Boundary};

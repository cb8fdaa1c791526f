//! Numerics for the one-dimensional transverse-field Ising chain whose
//! spin-spin coupling is the lattice Riesz fractional derivative kernel
//!
//! ```text
//! H = -J0 Σ_{i<j} J(|i-j|) σˣ_i σˣ_j + g Σ_j σᶻ_j,    J(r) = (-1)^(r+1) binom(q, q/2 + r)
//! ```
//!
//! The crate is `no_std` (it needs `alloc`) and is organised by stage of the
//! analysis:
//!
//! - [`kernel`]: the coupling J(r), generalized binomials and the momentum
//!   sums C_k, S_k, F(q, k).
//! - [`expfit`]: compression of J(r) into a short sum of decaying exponentials.
//! - [`mpo`]: matrix-product-operator assembly from that sum, and dense
//!   Hamiltonians for validation on small chains.
//! - [`quadratic`]: the truncated Jordan-Wigner (Bogoliubov-de Gennes) model,
//!   in momentum space and in real space, including Gaussian-state dynamics
//!   under a windowed local drive and bond entanglement entropies.
//! - [`ed`]: matrix-free Lanczos for the full spin Hamiltonian.
//! - [`scaling`]: finite-size, drift, light-cone front and dispersion fits.
//!
//! Basis convention everywhere: site 0 is the most significant bit of a basis
//! index, bit value 0 is spin up (σᶻ = +1).
#![no_std]
// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod ed;
mod error;
pub mod expfit;
pub mod kernel;
pub mod lsq;
pub mod mpo;
pub mod quadratic;
pub mod scaling;

pub use error::{Error, Result};
pub use expfit::{ExpSumApproximation, FitConfig};
pub use kernel::{CouplingKernel, FractionalOrder};
pub use scaling::ScalingFit;

//! Solver for the anti-Hermitian contracted Schrödinger equation (ACSE).
//!
//! The state variable is a spin-blocked two-electron reduced density matrix
//! (αα, αβ, ββ blocks over spatial orbitals). Each iteration evaluates the
//! residual `R = <[a†a†aa, H]>` and the update `U = <[a†a†aa, R]>` with a
//! cumulant reconstruction of the three-electron RDM folded directly into the
//! tensor contractions, then takes an Euler step `²D ← ²D + εU`. No rank-6
//! tensor is formed on the production path.
//!
//! A determinant-based full-CI oracle ([`fci`]) provides exact energies,
//! 1/2/3-RDMs and brute-force commutator expectations for validation.

pub mod cli;
pub mod error;
pub mod fci;
pub mod hamio;
pub mod rdm;
pub mod recon;
pub mod residual;
pub mod solver;

pub use error::{Error, Result};
pub use hamio::{
    build_reduced_hamiltonian, energy_from_reduced_h, parse_fcidump, IntegralSet, OrbitalSpace,
    ReducedH,
};
pub use rdm::{Cumulant2, Rdm1, Rdm2, Rdm3, SpinBlocks};
pub use recon::{MMatrix, OccupationSignature, ReconstructionKind};
pub use residual::{MaskMode, ResidualTensor, UpdateTensor};
pub use solver::{AcseResult, SolverConfig, Termination, TrajectoryRecord};

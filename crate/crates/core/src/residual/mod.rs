//! ACSE residual `R = ⟨[a†i a†j a_l a_k, H]⟩` and update `U = ⟨[a†i a†j a_l a_k, R̂]⟩`.
//!
//! For any two-body operator `T̂ = Σ T^{pq}_{rs} a†p a†q a_s a_r` with `T`
//! antisymmetric in both pairs, and `²D`, `³D` normalized by ½ and 1/6,
//!
//! ```text
//! ⟨[Γ^{ij}_{kl}, T̂]⟩ = 4 T^{kl}_{rs} ²D^{ij}_{rs} − 4 T^{pq}_{ij} ²D^{pq}_{kl}
//!                    − 12 T^{kq}_{rs} ³D^{ijq}_{rsl} + 12 T^{lq}_{rs} ³D^{ijq}_{rsk}
//!                    + 12 T^{pq}_{is} ³D^{pqj}_{kls} − 12 T^{pq}_{js} ³D^{pqi}_{kls}
//! ```
//!
//! The last pair is the pair-transpose of the first 3-RDM pair when `T` is
//! Hermitian, and its negative when `T` is anti-Hermitian, so the production
//! path evaluates one transposed sum `W ∓ Wᵀ`.

pub(crate) mod algebra;
mod contracted;
mod exact;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hamio::OrbitalSpace;
use crate::rdm::spin_block_newtype;

pub use algebra::Layout;
pub use contracted::{residual_contracted, update_contracted, ContractionContext};
pub use exact::{commutator_exact, residual_exact, update_exact};

spin_block_newtype!(
    /// Anti-Hermitian residual, same block layout as the 2-RDM (Hartree).
    ResidualTensor
);
spin_block_newtype!(
    /// Hermitian, traceless update direction for the 2-RDM.
    UpdateTensor
);

/// Treatment of residual elements whose four spatial indices are all active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MaskMode {
    PropagateActive,
    RestrictActive,
}

impl FromStr for MaskMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "propagate" | "true" => Ok(Self::PropagateActive),
            "restrict" | "false" => Ok(Self::RestrictActive),
            _ => Err(Error::Config(format!("unknown mask mode '{s}' (expected propagate or restrict)"))),
        }
    }
}

impl fmt::Display for MaskMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PropagateActive => "propagate",
            Self::RestrictActive => "restrict",
        })
    }
}

/// Zero every element whose spatial indices all lie in the active set
/// (`RestrictActive`); identity otherwise.
pub fn apply_mask(r: &ResidualTensor, space: &OrbitalSpace, mode: MaskMode) -> Result<ResidualTensor> {
    let mut out = r.clone();
    if mode == MaskMode::PropagateActive {
        return Ok(out);
    }
    if space.active().is_empty() {
        return Err(Error::Config("restricted propagation needs a non-empty active set".into()));
    }
    if space.norb() != r.norb() {
        return Err(Error::Dimension(format!("space has {} orbitals, residual has {}", space.norb(), r.norb())));
    }
    let act = space.active_mask();
    for b in out.blocks_mut() {
        for ((i, j, k, l), v) in b.indexed_iter_mut() {
            if act[i] && act[j] && act[k] && act[l] {
                *v = 0.0;
            }
        }
    }
    Ok(out)
}

/// Plain Frobenius norm over the three stored blocks. Pass the unmasked residual.
pub fn residual_norm(r: &ResidualTensor) -> f64 {
    r.frobenius()
}

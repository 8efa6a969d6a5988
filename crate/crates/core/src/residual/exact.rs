//! Explicit spin-orbital evaluation over a supplied 3-RDM. Test scale only.

use ndarray::Array4;

use super::{ResidualTensor, UpdateTensor};
use crate::error::{Error, Result};
use crate::hamio::ReducedH;
use crate::rdm::{check_rank6_cap, Rdm2, Rdm3, SpinBlocks};

/// `⟨[Γ^{ij}_{kl}, T̂]⟩` over spin orbitals from the six-term formula, folded
/// to spin blocks. `t` must be antisymmetric in both index pairs.
pub fn commutator_exact(t: &SpinBlocks, d2: &Rdm2, d3: &Rdm3) -> Result<SpinBlocks> {
    let r = t.norb();
    check_rank6_cap(r)?;
    if d2.norb() != r || d3.norb() != r {
        return Err(Error::Dimension("operator and RDM orbital counts differ".into()));
    }
    let t = t.to_spin_orbital();
    let d = d2.to_spin_orbital();
    let d3 = &d3.t;
    let n = 2 * r;
    let out = Array4::from_shape_fn((n, n, n, n), |(i, j, k, l)| {
        let mut two = 0.0;
        for p in 0..n {
            for q in 0..n {
                two += 4.0 * t[[k, l, p, q]] * d[[i, j, p, q]] - 4.0 * t[[p, q, i, j]] * d[[p, q, k, l]];
            }
        }
        let mut three = 0.0;
        for q in 0..n {
            for u in 0..n {
                for v in 0..n {
                    three += -12.0 * t[[k, q, u, v]] * d3[[i, j, q, u, v, l]]
                        + 12.0 * t[[l, q, u, v]] * d3[[i, j, q, u, v, k]]
                        + 12.0 * t[[u, v, i, q]] * d3[[u, v, j, k, l, q]]
                        - 12.0 * t[[u, v, j, q]] * d3[[u, v, i, k, l, q]];
                }
            }
        }
        two + three
    });
    Ok(SpinBlocks::from_spin_orbital(&out))
}

pub fn residual_exact(k: &ReducedH, d2: &Rdm2, d3: &Rdm3) -> Result<ResidualTensor> {
    commutator_exact(&k.spin_blocks(), d2, d3).map(ResidualTensor)
}

pub fn update_exact(r: &ResidualTensor, d2: &Rdm2, d3: &Rdm3) -> Result<UpdateTensor> {
    commutator_exact(r, d2, d3).map(UpdateTensor)
}

//! Fused residual and update contractions. The reconstructed 3-RDM enters
//! only through `G^{ij}_{kl} = Σ_{pqr} T^{kp}_{rq} ³D^{ijp}_{rql}`, which is
//! evaluated term by term with rank-4 intermediates.
//!
//! Term count per `T`: one 2-RDM contraction, eight for the Valdemoro part
//! (four of them O(r⁶)) and eight more for the NY cumulant (six O(r⁶)).

use super::algebra::{BlockTensor, Layout, Signs};
use super::{ResidualTensor, UpdateTensor};
use crate::error::{Error, Result};
use crate::hamio::ReducedH;
use crate::rdm::{cumulant2, Rdm1, Rdm2, SpinBlocks};
use crate::recon::{build_m, OccupationSignature, ReconstructionKind};

/// Per-state quantities shared by the residual and the update of one iteration.
pub struct ContractionContext {
    layout: Layout,
    kind: ReconstructionKind,
    norb: usize,
    d2: BlockTensor,
    d1: BlockTensor,
    m: BlockTensor,
    cumulant: Option<(BlockTensor, Signs)>,
}

impl ContractionContext {
    pub fn new(d2: &Rdm2, d1: &Rdm1, kind: ReconstructionKind, sig: Option<&OccupationSignature>) -> Result<Self> {
        Self::with_layout(Layout::SpinBlocked, d2, d1, kind, sig)
    }

    /// `Layout::SpinOrbital` runs the identical schedule on full spin-orbital tensors.
    pub fn with_layout(
        layout: Layout,
        d2: &Rdm2,
        d1: &Rdm1,
        kind: ReconstructionKind,
        sig: Option<&OccupationSignature>,
    ) -> Result<Self> {
        let norb = d2.norb();
        let dl = cumulant2(d2, d1)?;
        let m = build_m(&dl, d1)?;
        let cumulant = match kind {
            ReconstructionKind::Valdemoro => None,
            ReconstructionKind::NakatsujiYasuda => {
                let sig = sig.ok_or_else(|| Error::Config("NY reconstruction requires an occupation signature".into()))?;
                sig.check(norb)?;
                let s = Signs { alpha: sig.alpha.clone(), beta: sig.beta.clone() };
                Some((BlockTensor::from_pairs(layout, &dl), s))
            }
        };
        Ok(Self {
            layout,
            kind,
            norb,
            d2: BlockTensor::from_pairs(layout, d2),
            d1: BlockTensor::from_rdm1(layout, d1),
            m: BlockTensor::from_pairs(layout, &m),
            cumulant,
        })
    }

    pub fn kind(&self) -> ReconstructionKind {
        self.kind
    }

    /// `R = ⟨[Γ, H]⟩` with `H` from the antisymmetrized reduced Hamiltonian.
    pub fn residual(&self, k: &ReducedH) -> Result<ResidualTensor> {
        self.check(k.norb())?;
        Ok(ResidualTensor(self.commutator(&k.spin_blocks(), 1.0)))
    }

    /// `U = ⟨[Γ, R̂]⟩`; `R` anti-Hermitian flips the sign of the transposed sum.
    pub fn update(&self, r: &ResidualTensor) -> Result<UpdateTensor> {
        self.check(r.norb())?;
        Ok(UpdateTensor(self.commutator(r, -1.0)))
    }

    fn check(&self, r: usize) -> Result<()> {
        if r != self.norb {
            return Err(Error::Dimension(format!("operator has {r} orbitals, RDMs have {}", self.norb)));
        }
        Ok(())
    }

    /// `W − s·Wᵀ` with `W = 4·T^{kl}_{rs}²D^{ij}_{rs} − 12·(G − G^{k↔l})`.
    fn commutator(&self, t: &SpinBlocks, s: f64) -> SpinBlocks {
        let t = BlockTensor::from_pairs(self.layout, t);
        let mut w = BlockTensor::contract("klrs,ijrs->ijkl", &t, &self.d2).scaled(4.0);
        let g = self.g(&t);
        w.add_scaled(-12.0, &g.minus_permuted(1.0, &[0, 1, 3, 2]));
        w.minus_permuted(s, &[2, 3, 0, 1]).to_pairs()
    }

    fn g(&self, t: &BlockTensor) -> BlockTensor {
        let c = BlockTensor::contract;
        let (m, d1) = (&self.m, &self.d1);
        // Σ T^{kp}_{rq} M^{ij}_{rq} D^p_l
        let mut g = c("ijkp,pl->ijkl", &c("ijrq,kprq->ijkp", m, t), d1);
        // (T^{kp}_{rq} − T^{kp}_{qr}) M^{ij}_{lq} D^p_r = 2 T^{kp}_{rq} D^p_r M^{ij}_{lq}
        g.add_scaled(-2.0, &c("kq,ijlq->ijkl", &c("kprq,pr->kq", t, d1), m));
        // E^{ij}_{kl} = 2 T^{kp}_{rq} D^j_r M^{ip}_{lq} − T^{kp}_{rq} M^{ip}_{rq} D^j_l
        let mut e = c("kpjq,iplq->ijkl", &c("kprq,jr->kpjq", t, d1), m).scaled(2.0);
        e.add_scaled(-1.0, &c("ki,jl->ijkl", &c("kprq,iprq->ki", t, m), d1));
        g.add_scaled(1.0, &e.minus_permuted(1.0, &[1, 0, 2, 3]));
        let mut g = g.scaled(1.0 / 9.0);
        if let Some((dl, sig)) = &self.cumulant {
            g.add_scaled(2.0 / 3.0, &ny_terms(t, dl, sig));
        }
        g
    }
}

/// `Σ T^{kp}_{rq} ³Δ_NY^{ijp}_{rql}` without the overall `4/6`.
fn ny_terms(t: &BlockTensor, dl: &BlockTensor, sig: &Signs) -> BlockTensor {
    let c = BlockTensor::contract;
    // σ_a Δ^{ia}_{rq} Δ^{jp}_{al}
    let mut x = c("iarq,kprq->iakp", dl, t);
    x.scale_axis(1, sig);
    let mut a = c("iakp,jpal->ijkl", &x, dl);
    // the l↔r and l↔q lower-index terms coincide: −2 σ_a Δ^{ia}_{lq} Δ^{jp}_{ar}
    let mut z = c("kprq,jpar->kqja", t, dl);
    z.scale_axis(3, sig);
    a.add_scaled(-2.0, &c("kqja,ialq->ijkl", &z, dl));
    let mut out = a.minus_permuted(1.0, &[1, 0, 2, 3]);
    // −σ_a Δ^{pa}_{rq} Δ^{ji}_{al} = +σ_a Δ^{pa}_{rq} Δ^{ij}_{al}
    let mut y = c("kprq,parq->ka", t, dl);
    y.scale_axis(1, sig);
    out.add_scaled(1.0, &c("ka,ijal->ijkl", &y, dl));
    // 2 σ_a Δ^{pa}_{lq} Δ^{ji}_{ar}
    let mut v = c("kprq,palq->kral", t, dl);
    v.scale_axis(2, sig);
    out.add_scaled(2.0, &c("kral,jiar->ijkl", &v, dl));
    out
}

pub fn residual_contracted(
    k: &ReducedH,
    d2: &Rdm2,
    d1: &Rdm1,
    kind: ReconstructionKind,
    sig: Option<&OccupationSignature>,
) -> Result<ResidualTensor> {
    ContractionContext::new(d2, d1, kind, sig)?.residual(k)
}

pub fn update_contracted(
    r: &ResidualTensor,
    d2: &Rdm2,
    d1: &Rdm1,
    kind: ReconstructionKind,
    sig: Option<&OccupationSignature>,
) -> Result<UpdateTensor> {
    ContractionContext::new(d2, d1, kind, sig)?.update(r)
}

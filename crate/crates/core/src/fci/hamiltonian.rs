//! Slater–Condon matrix elements and the direct sigma product.

use ndarray::{Array2, ArrayView1, ArrayViewMut1};
use rayon::prelude::*;

use super::strings::{excite, parity_below, Link};
use super::DeterminantBasis;
use crate::hamio::IntegralSet;

/// `⟨P Q|R S⟩` over spin orbitals `p + σ·r`.
#[inline]
fn so_eri(ints: &IntegralSet, r: usize, p: usize, q: usize, u: usize, v: usize) -> f64 {
    if p / r != u / r || q / r != v / r {
        return 0.0;
    }
    ints.two[[p % r, q % r, u % r, v % r]]
}

#[inline]
fn so_h(ints: &IntegralSet, r: usize, p: usize, q: usize) -> f64 {
    if p / r != q / r {
        0.0
    } else {
        ints.one[[p % r, q % r]]
    }
}

fn bits(s: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |&i| s & (1u64 << i) != 0)
}

/// `⟨D'|H|D⟩` for spin-orbital bitstrings (α in the low `r` bits), without `E_nuc`.
pub(crate) fn element(ints: &IntegralSet, r: usize, bra: u64, ket: u64) -> f64 {
    let diff = bra ^ ket;
    match diff.count_ones() {
        0 => {
            let occ: Vec<usize> = bits(ket).collect();
            let mut e = 0.0;
            for (n, &i) in occ.iter().enumerate() {
                e += so_h(ints, r, i, i);
                for &j in &occ[..n] {
                    e += so_eri(ints, r, i, j, i, j) - so_eri(ints, r, i, j, j, i);
                }
            }
            e
        }
        2 => {
            let i = (ket & diff).trailing_zeros() as usize;
            let a = (bra & diff).trailing_zeros() as usize;
            let (_, sign) = excite(ket, a, i).unwrap();
            let mut v = so_h(ints, r, a, i);
            for j in bits(ket & !(1u64 << i)) {
                v += so_eri(ints, r, a, j, i, j) - so_eri(ints, r, a, j, j, i);
            }
            sign * v
        }
        4 => {
            let mut holes = bits(ket & diff);
            let (i, j) = (holes.next().unwrap(), holes.next().unwrap());
            let mut parts = bits(bra & diff);
            let (a, b) = (parts.next().unwrap(), parts.next().unwrap());
            // sign of a†a a†b a_j a_i |D⟩
            let mut s = ket;
            let mut sign = parity_below(s, i);
            s &= !(1u64 << i);
            sign *= parity_below(s, j);
            s &= !(1u64 << j);
            sign *= parity_below(s, b);
            s |= 1u64 << b;
            sign *= parity_below(s, a);
            sign * (so_eri(ints, r, a, b, i, j) - so_eri(ints, r, a, b, j, i))
        }
        _ => 0.0,
    }
}

/// Precomputed data for `σ = H c` with the Knowles–Handy factorization
/// `H = Σ h'_pq E_pq + ½ Σ (pq|rs) E_pq E_rs`, `h'_pq = h_pq − ½ Σ_r (pr|rq)`.
pub(crate) struct Sigma<'a> {
    basis: &'a DeterminantBasis,
    alpha_links: Vec<Vec<Link>>,
    beta_links: Vec<Vec<Link>>,
    hprime: Vec<f64>,
    eri: Array2<f64>,
}

impl<'a> Sigma<'a> {
    pub fn new(ints: &IntegralSet, basis: &'a DeterminantBasis) -> Self {
        let r = basis.norb;
        let chem = ints.chemist();
        let mut hprime = vec![0.0; r * r];
        for p in 0..r {
            for q in 0..r {
                let mut v = ints.one[[p, q]];
                for s in 0..r {
                    v -= 0.5 * chem[[p, s, s, q]];
                }
                hprime[p * r + q] = v;
            }
        }
        let eri = chem.as_standard_layout().into_owned().into_shape_with_order((r * r, r * r)).unwrap();
        Self {
            basis,
            alpha_links: super::strings::link_table(r, &basis.alpha),
            beta_links: super::strings::link_table(r, &basis.beta),
            hprime,
            eri,
        }
    }

    fn for_links(&self, det: usize, mut f: impl FnMut(usize, usize, f64)) {
        let nb = self.basis.beta.len();
        let (ia, ib) = (det / nb, det % nb);
        for l in &self.alpha_links[ia] {
            f(l.pq as usize, l.target as usize * nb + ib, l.sign);
        }
        for l in &self.beta_links[ib] {
            f(l.pq as usize, ia * nb + l.target as usize, l.sign);
        }
    }

    /// `D[K][pq] = ⟨K|E_pq|c⟩`, gathered per output row.
    fn d_vectors(&self, c: ArrayView1<f64>) -> Array2<f64> {
        let r2 = self.basis.norb * self.basis.norb;
        let n = self.basis.len();
        let mut d = Array2::zeros((n, r2));
        // E_pq|J⟩ = s|K⟩ ⇔ E_qp|K⟩ = s|J⟩, so row K gathers from its own links.
        d.axis_iter_mut(ndarray::Axis(0)).into_par_iter().enumerate().for_each(|(k, mut row)| {
            let r = self.basis.norb;
            self.for_links(k, |pq, j, sign| {
                let (p, q) = (pq / r, pq % r);
                row[q * r + p] += sign * c[j];
            });
        });
        d
    }

    pub fn apply(&self, c: ArrayView1<f64>, mut out: ArrayViewMut1<f64>) {
        let g = self.d_vectors(c).dot(&self.eri);
        let out_slice = out.as_slice_mut().expect("contiguous sigma output");
        let hp = &self.hprime;
        out_slice.par_iter_mut().enumerate().for_each(|(i, o)| {
            // σ_I = Σ_{pq,K} ⟨I|E_pq|K⟩ (h'_pq c_K + ½ G[K][pq]); ⟨I|E_pq|K⟩ = ⟨K|E_qp|I⟩
            let r = self.basis.norb;
            let mut acc = 0.0;
            self.for_links(i, |qp, k, sign| {
                let (q, p) = (qp / r, qp % r);
                let pq = p * r + q;
                acc += sign * (hp[pq] * c[k] + 0.5 * g[[k, pq]]);
            });
            *o = acc;
        });
    }
}

//! Molecular-orbital integrals and the reduced two-body Hamiltonian.

mod fcidump;

use ndarray::{Array2, Array4, Axis};

use crate::error::{Error, Result};
use crate::rdm::{Rdm1, Rdm2, SpinBlocks};

pub use fcidump::{parse_fcidump, read_fcidump, write_fcidump};

/// Spatial orbitals, electron counts per spin and the designated active set
/// (0-based, ordered, duplicate-free).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitalSpace {
    norb: usize,
    n_alpha: usize,
    n_beta: usize,
    active: Vec<usize>,
}

impl OrbitalSpace {
    pub fn new(norb: usize, n_alpha: usize, n_beta: usize) -> Result<Self> {
        if n_alpha > norb || n_beta > norb {
            return Err(Error::Space(format!(
                "electron counts ({n_alpha}, {n_beta}) exceed {norb} orbitals"
            )));
        }
        if n_alpha + n_beta == 0 {
            return Err(Error::Space("at least one electron is required".into()));
        }
        Ok(Self { norb, n_alpha, n_beta, active: Vec::new() })
    }

    /// Replace the active set. Indices are 0-based.
    pub fn with_active(mut self, active: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; self.norb];
        for &p in &active {
            if p >= self.norb {
                return Err(Error::Space(format!(
                    "active orbital {} outside 1..={}",
                    p + 1,
                    self.norb
                )));
            }
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::Space(format!("active orbital {} listed twice", p + 1)));
            }
        }
        self.active = active;
        Ok(self)
    }

    pub fn norb(&self) -> usize {
        self.norb
    }

    pub fn n_alpha(&self) -> usize {
        self.n_alpha
    }

    pub fn n_beta(&self) -> usize {
        self.n_beta
    }

    pub fn n_electrons(&self) -> usize {
        self.n_alpha + self.n_beta
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// Membership mask of the active set over all spatial orbitals.
    pub fn active_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.norb];
        for &p in &self.active {
            mask[p] = true;
        }
        mask
    }

    pub(crate) fn require_pairs(&self) -> Result<()> {
        if self.n_electrons() < 2 {
            return Err(Error::Space(format!(
                "operation needs N >= 2 electrons, got {}",
                self.n_electrons()
            )));
        }
        Ok(())
    }
}

/// Nuclear repulsion, one-electron matrix `h[p][r]` and two-electron tensor
/// in physicist order, `two[p][q][r][s] = <pq|rs> = (pr|qs)`. Hartree.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegralSet {
    pub e_nuc: f64,
    pub one: Array2<f64>,
    pub two: Array4<f64>,
}

impl IntegralSet {
    pub fn norb(&self) -> usize {
        self.one.nrows()
    }

    /// Chemist-order view `(pq|rs)` as an owned tensor.
    pub fn chemist(&self) -> Array4<f64> {
        // (pq|rs) = <pr|qs>
        self.two.view().permuted_axes([0, 2, 1, 3]).to_owned()
    }

    /// Energy evaluated directly from the raw integrals:
    /// `Σ h·(¹Dα+¹Dβ) + Σ <pq|rs>(²Dαα + ²Dββ + 2·²Dαβ) + E_nuc`.
    pub fn energy(&self, d1: &Rdm1, d2: &Rdm2) -> Result<f64> {
        let r = self.norb();
        if d1.norb() != r || d2.norb() != r {
            return Err(Error::Dimension(format!(
                "integrals have {r} orbitals, RDMs have {} / {}",
                d1.norb(),
                d2.norb()
            )));
        }
        let one = (&self.one * &(&d1.a + &d1.b)).sum();
        let two = (&self.two * &(&d2.aa + &d2.bb + &(2.0 * &d2.ab))).sum();
        Ok(one + two + self.e_nuc)
    }
}

/// Reduced two-body Hamiltonian over spatial orbitals,
/// `²K^{pq}_{rs} = ½<pq|rs> + (h_pr δ_qs + h_qs δ_pr) / (2(N−1))`,
/// so that `H = Σ ²K^{pq}_{rs} a†p a†q a_s a_r` on N-electron states.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedH {
    pub k: Array4<f64>,
    pub n_electrons: usize,
    pub e_nuc: f64,
}

impl ReducedH {
    pub fn norb(&self) -> usize {
        self.k.len_of(Axis(0))
    }

    /// Spin-orbital ²K antisymmetrized in both index pairs, folded to the
    /// stored αα/αβ/ββ blocks. Same operator, same energy.
    pub fn spin_blocks(&self) -> SpinBlocks {
        let swapped = self.k.view().permuted_axes([1, 0, 2, 3]);
        let same = 0.5 * (&self.k - &swapped);
        SpinBlocks { aa: same.clone(), ab: 0.5 * &self.k, bb: same }
    }
}

pub fn build_reduced_hamiltonian(ints: &IntegralSet, space: &OrbitalSpace) -> Result<ReducedH> {
    space.require_pairs()?;
    let r = ints.norb();
    if space.norb() != r {
        return Err(Error::Dimension(format!(
            "integrals have {r} orbitals, space has {}",
            space.norb()
        )));
    }
    let n = space.n_electrons();
    let scale = 1.0 / (2.0 * (n as f64 - 1.0));
    let mut k = 0.5 * &ints.two;
    for p in 0..r {
        for q in 0..r {
            for s in 0..r {
                // h_pr δ_qs term with s = q, and h_qs δ_pr term with r = p
                k[[p, q, s, q]] += scale * ints.one[[p, s]];
                k[[p, q, p, s]] += scale * ints.one[[q, s]];
            }
        }
    }
    Ok(ReducedH { k, n_electrons: n, e_nuc: ints.e_nuc })
}

/// `E = 2 Σ_spin-orbital ²K^{pq}_{rs} ²D^{pq}_{rs} + E_nuc`.
pub fn energy_from_reduced_h(k: &ReducedH, d2: &Rdm2) -> Result<f64> {
    if k.norb() != d2.norb() {
        return Err(Error::Dimension(format!(
            "reduced Hamiltonian has {} orbitals, 2-RDM has {}",
            k.norb(),
            d2.norb()
        )));
    }
    Ok(2.0 * k.spin_blocks().so_dot(d2) + k.e_nuc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdm::hf_reference;
    use ndarray::{arr2, Array4};

    fn one_orbital() -> (OrbitalSpace, IntegralSet) {
        let space = OrbitalSpace::new(1, 1, 1).unwrap();
        let ints = IntegralSet {
            e_nuc: 0.7,
            one: arr2(&[[-1.0]]),
            two: Array4::from_elem((1, 1, 1, 1), 0.5),
        };
        (space, ints)
    }

    #[test]
    fn reduced_h_single_orbital() {
        let (space, ints) = one_orbital();
        let k = build_reduced_hamiltonian(&ints, &space).unwrap();
        // ½·0.5 + (−1 − 1)/2
        assert!((k.k[[0, 0, 0, 0]] - (-0.75)).abs() < 1e-15);
        let (d1, d2) = hf_reference(&space).unwrap();
        let e = energy_from_reduced_h(&k, &d2).unwrap();
        // 2h + (11|11) + E_nuc
        assert!((e - (-2.0 + 0.5 + 0.7)).abs() < 1e-14);
        assert!((ints.energy(&d1, &d2).unwrap() - e).abs() < 1e-14);
    }

    #[test]
    fn zero_one_body_gives_half_v() {
        let (space, mut ints) = one_orbital();
        ints.one.fill(0.0);
        let k = build_reduced_hamiltonian(&ints, &space).unwrap();
        assert_eq!(k.k, 0.5 * &ints.two);
    }

    #[test]
    fn zero_k_gives_nuclear_energy() {
        let (space, _) = one_orbital();
        let k = ReducedH { k: Array4::zeros((1, 1, 1, 1)), n_electrons: 2, e_nuc: 0.7 };
        let (_, d2) = hf_reference(&space).unwrap();
        assert_eq!(energy_from_reduced_h(&k, &d2).unwrap(), 0.7);
    }

    #[test]
    fn rejects_single_electron() {
        let space = OrbitalSpace::new(2, 1, 0).unwrap();
        let ints = IntegralSet {
            e_nuc: 0.0,
            one: Array2::zeros((2, 2)),
            two: Array4::zeros((2, 2, 2, 2)),
        };
        assert!(matches!(build_reduced_hamiltonian(&ints, &space), Err(Error::Space(_))));
    }

    #[test]
    fn space_invariants() {
        assert!(OrbitalSpace::new(2, 3, 0).is_err());
        assert!(OrbitalSpace::new(2, 0, 0).is_err());
        let s = OrbitalSpace::new(4, 2, 2).unwrap();
        assert!(s.clone().with_active(vec![1, 1]).is_err());
        assert!(s.clone().with_active(vec![4]).is_err());
        assert_eq!(s.with_active(vec![2, 0]).unwrap().active_mask(), vec![true, false, true, false]);
    }
}

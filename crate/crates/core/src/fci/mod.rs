//! Determinant-based full configuration interaction.
//!
//! Determinants are pairs of α and β occupation strings, each list in
//! ascending bitmask order; determinant `I = iα·nβ + iβ`. In the second-
//! quantized convention all α creators stand to the left of all β creators,
//! orbitals ascending within each spin. Small spaces are diagonalized densely;
//! larger ones use block Davidson on a direct sigma product.

mod davidson;
mod fock;
mod hamiltonian;
mod strings;

use std::sync::Arc;

use ndarray::{Array1, Array2, Array4, Array6, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamio::{IntegralSet, OrbitalSpace};
use crate::rdm::{check_rank6_cap, Rdm1, Rdm2, Rdm3, SpinBlocks};
use fock::FockVec;
use strings::{binomial, link_table};

/// Largest basis diagonalized densely.
pub const DENSE_LIMIT: usize = 2000;
/// Largest basis accepted by the iterative solver.
pub const SPARSE_LIMIT: usize = 1_000_000;
/// Eigen-residual tolerance of the iterative solver.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterminantBasis {
    pub norb: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub alpha: Vec<u64>,
    pub beta: Vec<u64>,
}

impl DeterminantBasis {
    pub fn new(space: &OrbitalSpace) -> Result<Self> {
        let r = space.norb();
        if 2 * r > 64 {
            return Err(Error::SizeCap(format!("{r} orbitals exceed the 32-orbital string width")));
        }
        let size = binomial(r, space.n_alpha()).saturating_mul(binomial(r, space.n_beta()));
        if size > SPARSE_LIMIT {
            return Err(Error::SizeCap(format!("{size} determinants exceed the limit of {SPARSE_LIMIT}")));
        }
        Ok(Self {
            norb: r,
            n_alpha: space.n_alpha(),
            n_beta: space.n_beta(),
            alpha: strings::strings(r, space.n_alpha()),
            beta: strings::strings(r, space.n_beta()),
        })
    }

    pub fn len(&self) -> usize {
        self.alpha.len() * self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(α mask, β mask)` of determinant `i`.
    pub fn det(&self, i: usize) -> (u64, u64) {
        let nb = self.beta.len();
        (self.alpha[i / nb], self.beta[i % nb])
    }

    /// Combined spin-orbital bitstring, α in the low bits.
    pub fn spin_orbital_mask(&self, i: usize) -> u64 {
        let (a, b) = self.det(i);
        a | (b << self.norb)
    }

    pub fn index_of(&self, alpha: u64, beta: u64) -> Option<usize> {
        let ia = self.alpha.binary_search(&alpha).ok()?;
        let ib = self.beta.binary_search(&beta).ok()?;
        Some(ia * self.beta.len() + ib)
    }
}

/// Electronic Hamiltonian element `⟨I|H|J⟩`, `E_nuc` included on the diagonal.
pub fn hamiltonian_element(ints: &IntegralSet, basis: &DeterminantBasis, i: usize, j: usize) -> f64 {
    let r = basis.norb;
    let v = hamiltonian::element(ints, r, basis.spin_orbital_mask(i), basis.spin_orbital_mask(j));
    if i == j {
        v + ints.e_nuc
    } else {
        v
    }
}

#[derive(Clone, Debug)]
pub struct FciState {
    pub energy: f64,
    pub coeffs: Array1<f64>,
    pub index: usize,
    /// `‖Hc − Ec‖` at convergence.
    pub residual: f64,
    pub basis: Arc<DeterminantBasis>,
}

/// Lowest `n_states` eigenpairs of the `(n_α, n_β)` sector.
pub fn fci_solve(ints: &IntegralSet, space: &OrbitalSpace, n_states: usize) -> Result<Vec<FciState>> {
    if ints.norb() != space.norb() {
        return Err(Error::Dimension(format!("integrals have {} orbitals, space has {}", ints.norb(), space.norb())));
    }
    let basis = Arc::new(DeterminantBasis::new(space)?);
    let n = basis.len();
    if n_states == 0 || n_states > n {
        return Err(Error::Config(format!("requested {n_states} states from a {n}-determinant space")));
    }
    let pairs = if n <= DENSE_LIMIT {
        let h = Array2::from_shape_fn((n, n), |(i, j)| hamiltonian_element(ints, &basis, i, j));
        davidson::dense_lowest(&h, n_states)
    } else {
        let diag = Array1::from_shape_fn(n, |i| hamiltonian_element(ints, &basis, i, i));
        let sigma = hamiltonian::Sigma::new(ints, &basis);
        let opts = davidson::Options {
            n_roots: n_states,
            guard: n_states.max(4),
            tol: RESIDUAL_TOL,
            max_subspace: 16 * (n_states + 4),
            max_iter: 2000,
        };
        let e_nuc = ints.e_nuc;
        let mut p = davidson::davidson(
            &diag,
            |x, mut y| {
                sigma.apply(x, y.view_mut());
                y.scaled_add(e_nuc, &x);
            },
            &opts,
        )?;
        for v in &mut p.vectors {
            let big = v.iter().copied().fold(0.0f64, |m, c| if c.abs() > m.abs() { c } else { m });
            if big < 0.0 {
                v.mapv_inplace(|c| -c);
            }
        }
        p
    };
    Ok(pairs
        .values
        .into_iter()
        .zip(pairs.vectors)
        .zip(pairs.residuals)
        .enumerate()
        .map(|(index, ((energy, coeffs), residual))| FciState { energy, coeffs, index, residual, basis: basis.clone() })
        .collect())
}

impl FciState {
    /// Wrap an arbitrary coefficient vector (normalized here). Energy is unset (NaN).
    pub fn from_vector(basis: Arc<DeterminantBasis>, coeffs: Array1<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::Dimension(format!("{} coefficients for {} determinants", coeffs.len(), basis.len())));
        }
        let norm = coeffs.dot(&coeffs).sqrt();
        if norm == 0.0 {
            return Err(Error::Config("zero coefficient vector".into()));
        }
        Ok(Self { energy: f64::NAN, coeffs: coeffs / norm, index: 0, residual: f64::NAN, basis })
    }

    /// `D^σ[K][pq] = ⟨K|a†pσ a_qσ|ψ⟩`, σ = α if `beta` is false.
    fn d_vectors(&self, beta: bool) -> Array2<f64> {
        let b = &*self.basis;
        let r = b.norb;
        let nb = b.beta.len();
        let links = if beta { link_table(r, &b.beta) } else { link_table(r, &b.alpha) };
        let mut d = Array2::zeros((b.len(), r * r));
        d.axis_iter_mut(Axis(0)).into_par_iter().enumerate().for_each(|(k, mut row)| {
            let (ia, ib) = (k / nb, k % nb);
            let own = if beta { &links[ib] } else { &links[ia] };
            for l in own {
                // E_pq|K⟩ = s|J⟩  ⇒  ⟨K|E_qp|J⟩ = s
                let j = if beta { ia * nb + l.target as usize } else { l.target as usize * nb + ib };
                let (p, q) = (l.pq as usize / r, l.pq as usize % r);
                row[q * r + p] += l.sign * self.coeffs[j];
            }
        });
        d
    }

    pub fn rdm1(&self) -> Rdm1 {
        let r = self.basis.norb;
        let one = |beta: bool| {
            let d = self.d_vectors(beta);
            let v = self.coeffs.dot(&d);
            v.into_shape_with_order((r, r)).unwrap()
        };
        Rdm1 { a: one(false), b: one(true) }
    }

    /// 1- and 2-RDMs from Gram products `⟨E^σ_ik E^τ_jl⟩ = Σ_K D^σ[K][ki] D^τ[K][jl]`.
    pub fn rdm12(&self) -> (Rdm1, Rdm2) {
        let r = self.basis.norb;
        let da = self.d_vectors(false);
        let db = self.d_vectors(true);
        let d1 = Rdm1 {
            a: self.coeffs.dot(&da).into_shape_with_order((r, r)).unwrap(),
            b: self.coeffs.dot(&db).into_shape_with_order((r, r)).unwrap(),
        };
        // gram[(ki),(jl)] with the transpose on the bra side: ⟨E_ik …⟩ = ⟨E_ki ψ| …⟩
        let gram = |x: &Array2<f64>, y: &Array2<f64>| x.t().dot(y);
        let (gaa, gab, gbb) = (gram(&da, &da), gram(&da, &db), gram(&db, &db));
        let ee = |g: &Array2<f64>, i: usize, k: usize, j: usize, l: usize| g[[k * r + i, j * r + l]];
        let same = |g: &Array2<f64>, d: &Array2<f64>| {
            Array4::from_shape_fn((r, r, r, r), |(i, j, k, l)| {
                let delta = if j == k { d[[i, l]] } else { 0.0 };
                0.5 * (ee(g, i, k, j, l) - delta)
            })
        };
        let aa = same(&gaa, &d1.a);
        let bb = same(&gbb, &d1.b);
        let ab = Array4::from_shape_fn((r, r, r, r), |(i, j, k, l)| 0.5 * ee(&gab, i, k, j, l));
        let mut d2 = SpinBlocks { aa, ab, bb };
        // Gram products are exact up to rounding; restore the symmetries exactly.
        d2.symmetrize(1.0);
        (d1, Rdm2(d2))
    }

    pub fn rdm2(&self) -> Rdm2 {
        self.rdm12().1
    }

    pub(crate) fn fock(&self) -> FockVec {
        (0..self.basis.len())
            .filter(|&i| self.coeffs[i] != 0.0)
            .map(|i| (self.basis.spin_orbital_mask(i), self.coeffs[i]))
            .collect()
    }

    fn check_cap(&self) -> Result<()> {
        check_rank6_cap(self.basis.norb)
    }

    /// 2-RDM by direct operator application in Fock space.
    pub fn rdm2_brute_force(&self) -> Result<Rdm2> {
        self.check_cap()?;
        let n = 2 * self.basis.norb;
        let psi = self.fock();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|k| (k + 1..n).map(move |l| (k, l))).collect();
        // a_l a_k |ψ⟩ pairs with ⟨ψ| a†i a†j.
        let phi: Vec<FockVec> = pairs.iter().map(|&(k, l)| fock::annihilate(&fock::annihilate(&psi, k), l)).collect();
        let mut t = Array4::zeros((n, n, n, n));
        for (x, &(i, j)) in pairs.iter().enumerate() {
            for (y, &(k, l)) in pairs.iter().enumerate() {
                let v = 0.5 * fock::dot(&phi[x], &phi[y]);
                for (a, b, s1) in [(i, j, 1.0), (j, i, -1.0)] {
                    for (c, d, s2) in [(k, l, 1.0), (l, k, -1.0)] {
                        t[[a, b, c, d]] = s1 * s2 * v;
                    }
                }
            }
        }
        Ok(Rdm2(SpinBlocks::from_spin_orbital(&t)))
    }

    /// Spin-orbital 3-RDM, `(1/6)⟨a†i a†j a†k a_n a_m a_l⟩`.
    pub fn rdm3(&self) -> Result<Rdm3> {
        self.check_cap()?;
        let n = 2 * self.basis.norb;
        let psi = self.fock();
        let triples: Vec<[usize; 3]> = (0..n)
            .flat_map(|a| (a + 1..n).flat_map(move |b| (b + 1..n).map(move |c| [a, b, c])))
            .collect();
        let phi: Vec<FockVec> = triples
            .iter()
            .map(|&[a, b, c]| fock::annihilate(&fock::annihilate(&fock::annihilate(&psi, a), b), c))
            .collect();
        const PERMS: [([usize; 3], f64); 6] =
            [([0, 1, 2], 1.0), ([0, 2, 1], -1.0), ([1, 0, 2], -1.0), ([1, 2, 0], 1.0), ([2, 0, 1], 1.0), ([2, 1, 0], -1.0)];
        let mut t = Array6::zeros((n, n, n, n, n, n));
        for (x, up) in triples.iter().enumerate() {
            if phi[x].is_empty() {
                continue;
            }
            for (y, lo) in triples.iter().enumerate() {
                let v = fock::dot(&phi[x], &phi[y]) / 6.0;
                if v == 0.0 {
                    continue;
                }
                for (pu, su) in PERMS {
                    for (pl, sl) in PERMS {
                        t[[up[pu[0]], up[pu[1]], up[pu[2]], lo[pl[0]], lo[pl[1]], lo[pl[2]]]] = su * sl * v;
                    }
                }
            }
        }
        Rdm3::new(t)
    }
}

/// Brute-force `⟨ψ|[a†i a†j a_l a_k, T̂]|ψ⟩` for all spin-orbital quadruples,
/// with `T̂ = Σ T^{pq}_{rs} a†p a†q a_s a_r` built from spin blocks.
pub struct CommutatorOracle {
    n: usize,
    psi_pairs: Vec<FockVec>,
    t_psi_pairs: Vec<FockVec>,
    tdag_psi_pairs: Vec<FockVec>,
}

impl CommutatorOracle {
    pub fn new(state: &FciState, op: &SpinBlocks) -> Result<Self> {
        state.check_cap()?;
        let r = state.basis.norb;
        if op.norb() != r {
            return Err(Error::Dimension(format!("operator has {} orbitals, state has {r}", op.norb())));
        }
        let n = 2 * r;
        let t = op.to_spin_orbital();
        let psi = state.fock();
        let t_psi = fock::apply_two_body(&psi, n, |p, q, u, v| t[[p, q, u, v]]);
        let tdag_psi = fock::apply_two_body(&psi, n, |p, q, u, v| t[[u, v, p, q]]);
        let pairs = |v: &FockVec| -> Vec<FockVec> {
            (0..n * n).map(|x| fock::annihilate(&fock::annihilate(v, x / n), x % n)).collect()
        };
        Ok(Self { n, psi_pairs: pairs(&psi), t_psi_pairs: pairs(&t_psi), tdag_psi_pairs: pairs(&tdag_psi) })
    }

    /// Element for spin-orbital indices `p + σ·r`.
    pub fn element(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        // ⟨ψ|a†i a†j a_l a_k|χ⟩ = ⟨a_j a_i ψ|a_l a_k χ⟩
        let bra = i * n + j;
        let ket = k * n + l;
        fock::dot(&self.psi_pairs[bra], &self.t_psi_pairs[ket]) - fock::dot(&self.tdag_psi_pairs[bra], &self.psi_pairs[ket])
    }

    pub fn tensor(&self) -> SpinBlocks {
        let n = self.n;
        let t = Array4::from_shape_fn((n, n, n, n), |(i, j, k, l)| self.element(i, j, k, l));
        SpinBlocks::from_spin_orbital(&t)
    }
}

pub fn commutator_expectation(state: &FciState, idx: [usize; 4], op: &SpinBlocks) -> Result<f64> {
    let o = CommutatorOracle::new(state, op)?;
    let n = 2 * state.basis.norb;
    if idx.iter().any(|&x| x >= n) {
        return Err(Error::Dimension(format!("spin-orbital index outside 0..{n}")));
    }
    Ok(o.element(idx[0], idx[1], idx[2], idx[3]))
}

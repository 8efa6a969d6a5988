//! Spin-blocked reduced density matrices.
//!
//! Two-body tensors are stored as three blocks over spatial orbitals:
//! `aa[i][j][k][l] = ²D^{iα jα}_{kα lα}`, `ab[i][j][k][l] = ²D^{iα jβ}_{kα lβ}`
//! and `bb`. The remaining mixed-spin sectors follow from antisymmetry.
//! Spin orbitals are numbered `p + σ·r` with α (σ = 0) first.

mod io;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, Array4, Array6, Axis, Zip};

use crate::error::{Error, Result};
use crate::hamio::OrbitalSpace;

pub use io::{parse_rdm, read_rdm, write_rdm, RdmFile};

/// Largest spin-orbital count for which rank-6 tensors may be formed.
pub const MAX_SPIN_ORBITALS_RANK6: usize = 12;

pub(crate) fn check_rank6_cap(norb: usize) -> Result<()> {
    if 2 * norb > MAX_SPIN_ORBITALS_RANK6 {
        return Err(Error::SizeCap(format!(
            "rank-6 tensors are limited to {MAX_SPIN_ORBITALS_RANK6} spin orbitals, got {}",
            2 * norb
        )));
    }
    Ok(())
}

/// Three two-body spin blocks sharing one layout.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinBlocks {
    pub aa: Array4<f64>,
    pub ab: Array4<f64>,
    pub bb: Array4<f64>,
}

impl SpinBlocks {
    pub fn zeros(norb: usize) -> Self {
        let z = Array4::zeros((norb, norb, norb, norb));
        Self { aa: z.clone(), ab: z.clone(), bb: z }
    }

    pub fn norb(&self) -> usize {
        self.aa.len_of(Axis(0))
    }

    pub fn blocks(&self) -> [&Array4<f64>; 3] {
        [&self.aa, &self.ab, &self.bb]
    }

    pub fn blocks_mut(&mut self) -> [&mut Array4<f64>; 3] {
        [&mut self.aa, &mut self.ab, &mut self.bb]
    }

    pub fn map(&self, f: impl Fn(&Array4<f64>) -> Array4<f64>) -> Self {
        Self { aa: f(&self.aa), ab: f(&self.ab), bb: f(&self.bb) }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(&Array4<f64>, &Array4<f64>) -> Array4<f64>) -> Self {
        Self { aa: f(&self.aa, &other.aa), ab: f(&self.ab, &other.ab), bb: f(&self.bb, &other.bb) }
    }

    /// `self + c·other`, in place.
    pub fn add_scaled(&mut self, c: f64, other: &Self) {
        for (x, y) in self.blocks_mut().into_iter().zip(other.blocks()) {
            x.scaled_add(c, y);
        }
    }

    /// Full spin-orbital contraction `Σ_{PQRS} self·other`. Each of the four
    /// mixed-spin sectors contributes the same `Σ ab·ab`.
    pub fn so_dot(&self, other: &SpinBlocks) -> f64 {
        (&self.aa * &other.aa).sum() + (&self.bb * &other.bb).sum() + 4.0 * (&self.ab * &other.ab).sum()
    }

    /// Frobenius norm over the three stored blocks, unweighted.
    pub fn frobenius(&self) -> f64 {
        self.blocks().iter().map(|b| b.iter().map(|x| x * x).sum::<f64>()).sum::<f64>().sqrt()
    }

    /// Exchange upper and lower index pairs, `X^{ij}_{kl} → X^{kl}_{ij}`.
    pub fn transpose_pairs(&self) -> Self {
        self.map(|b| b.view().permuted_axes([2, 3, 0, 1]).to_owned())
    }

    /// `Σ_{ij} X^{ij}_{ij}` per block.
    pub fn traces(&self) -> [f64; 3] {
        self.blocks().map(pair_trace)
    }

    /// Largest `|X − s·Xᵀ|` over all blocks (`s = +1` Hermitian, `−1` anti-Hermitian).
    pub fn pair_symmetry_violation(&self, s: f64) -> f64 {
        self.blocks()
            .iter()
            .map(|b| {
                let t = b.view().permuted_axes([2, 3, 0, 1]);
                Zip::from(*b).and(&t).fold(0.0f64, |m, x, y| m.max((x - s * y).abs()))
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation from antisymmetry under `i↔j` and `k↔l` in the same-spin blocks.
    pub fn antisymmetry_violation(&self) -> f64 {
        [&self.aa, &self.bb]
            .iter()
            .map(|b| {
                let s1 = b.view().permuted_axes([1, 0, 2, 3]);
                let s2 = b.view().permuted_axes([0, 1, 3, 2]);
                Zip::from(*b)
                    .and(&s1)
                    .and(&s2)
                    .fold(0.0f64, |m, x, y, z| m.max((x + y).abs()).max((x + z).abs()))
            })
            .fold(0.0, f64::max)
    }

    /// Project onto the same-spin antisymmetric subspace, then onto
    /// `X = s·Xᵀ`. Both projections commute, so the result satisfies both.
    pub fn symmetrize(&mut self, s: f64) {
        for b in [&mut self.aa, &mut self.bb] {
            let t = b.view().permuted_axes([1, 0, 2, 3]).to_owned();
            *b = 0.5 * (&*b - &t);
            let t = b.view().permuted_axes([0, 1, 3, 2]).to_owned();
            *b = 0.5 * (&*b - &t);
        }
        for b in self.blocks_mut() {
            let t = b.view().permuted_axes([2, 3, 0, 1]).to_owned();
            b.zip_mut_with(&t, |x, y| *x = 0.5 * (*x + s * y));
        }
    }

    /// Expand to the `(2r)^4` spin-orbital tensor. Assumes antisymmetry.
    pub fn to_spin_orbital(&self) -> Array4<f64> {
        let r = self.norb();
        let n = 2 * r;
        let mut t = Array4::zeros((n, n, n, n));
        for p in 0..r {
            for q in 0..r {
                for u in 0..r {
                    for v in 0..r {
                        let ab = self.ab[[p, q, u, v]];
                        t[[p, q, u, v]] = self.aa[[p, q, u, v]];
                        t[[p + r, q + r, u + r, v + r]] = self.bb[[p, q, u, v]];
                        t[[p, q + r, u, v + r]] = ab;
                        t[[q + r, p, v + r, u]] = ab;
                        t[[p, q + r, v + r, u]] = -ab;
                        t[[q + r, p, u, v + r]] = -ab;
                    }
                }
            }
        }
        t
    }

    /// Fold a spin-orbital tensor to the stored blocks.
    pub fn from_spin_orbital(t: &Array4<f64>) -> Self {
        let n = t.len_of(Axis(0));
        let r = n / 2;
        let sub = |sp: [usize; 4]| {
            Array4::from_shape_fn((r, r, r, r), |(p, q, u, v)| {
                t[[p + sp[0] * r, q + sp[1] * r, u + sp[2] * r, v + sp[3] * r]]
            })
        };
        Self { aa: sub([0, 0, 0, 0]), ab: sub([0, 1, 0, 1]), bb: sub([1, 1, 1, 1]) }
    }
}

fn pair_trace(b: &Array4<f64>) -> f64 {
    let r = b.len_of(Axis(0));
    let mut s = 0.0;
    for i in 0..r {
        for j in 0..r {
            s += b[[i, j, i, j]];
        }
    }
    s
}

macro_rules! spin_block_newtype {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name(pub $crate::rdm::SpinBlocks);

        impl ::std::ops::Deref for $name {
            type Target = $crate::rdm::SpinBlocks;
            fn deref(&self) -> &$crate::rdm::SpinBlocks {
                &self.0
            }
        }

        impl ::std::ops::DerefMut for $name {
            fn deref_mut(&mut self) -> &mut $crate::rdm::SpinBlocks {
                &mut self.0
            }
        }

        impl From<$crate::rdm::SpinBlocks> for $name {
            fn from(b: $crate::rdm::SpinBlocks) -> Self {
                Self(b)
            }
        }
    };
}
pub(crate) use spin_block_newtype;

spin_block_newtype!(
    /// Two-electron RDM, `²D^{ij}_{kl} = ½⟨a†i a†j a_l a_k⟩` per spin block.
    Rdm2
);
spin_block_newtype!(
    /// Two-body cumulant `²Δ = ²D − ¹D∧¹D`.
    Cumulant2
);

/// One-electron RDM per spin, `¹D^i_k = ⟨a†i a_k⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rdm1 {
    pub a: Array2<f64>,
    pub b: Array2<f64>,
}

impl Rdm1 {
    pub fn norb(&self) -> usize {
        self.a.nrows()
    }

    pub fn traces(&self) -> [f64; 2] {
        [self.a.diag().sum(), self.b.diag().sum()]
    }

    pub fn spin_summed(&self) -> Array2<f64> {
        &self.a + &self.b
    }

    /// Spin-orbital matrix, α block first.
    pub fn to_spin_orbital(&self) -> Array2<f64> {
        let r = self.norb();
        let mut d = Array2::zeros((2 * r, 2 * r));
        d.slice_mut(ndarray::s![..r, ..r]).assign(&self.a);
        d.slice_mut(ndarray::s![r.., r..]).assign(&self.b);
        d
    }
}

/// Spin-orbital three-electron RDM, `³D^{ijk}_{lmn} = (1/6)⟨a†i a†j a†k a_n a_m a_l⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rdm3 {
    pub t: Array6<f64>,
}

impl Rdm3 {
    pub fn new(t: Array6<f64>) -> Result<Self> {
        let n = t.len_of(Axis(0));
        if n % 2 != 0 || t.shape().iter().any(|&d| d != n) {
            return Err(Error::Dimension(format!("rank-6 tensor shape {:?} is not (2r)^6", t.shape())));
        }
        check_rank6_cap(n / 2)?;
        Ok(Self { t })
    }

    pub fn zeros(norb: usize) -> Result<Self> {
        check_rank6_cap(norb)?;
        let n = 2 * norb;
        Ok(Self { t: Array6::zeros((n, n, n, n, n, n)) })
    }

    pub fn norb(&self) -> usize {
        self.t.len_of(Axis(0)) / 2
    }

    /// Restricted to triples whose spins are given by `spins` (0 = α).
    pub fn sector_trace(&self, spins: [usize; 3]) -> f64 {
        let r = self.norb();
        let mut s = 0.0;
        for i in 0..r {
            for j in 0..r {
                for k in 0..r {
                    let (a, b, c) = (i + spins[0] * r, j + spins[1] * r, k + spins[2] * r);
                    s += self.t[[a, b, c, a, b, c]];
                }
            }
        }
        s
    }

    pub fn trace(&self) -> f64 {
        let n = 2 * self.norb();
        (0..n)
            .flat_map(|i| (0..n).flat_map(move |j| (0..n).map(move |k| (i, j, k))))
            .map(|(i, j, k)| self.t[[i, j, k, i, j, k]])
            .sum()
    }

    /// `Σ_k ³D^{ijk}_{lmk}` as a spin-orbital rank-4 tensor; equals `((N−2)/3)·²D`.
    pub fn contract_last(&self) -> Array4<f64> {
        let n = 2 * self.norb();
        Array4::from_shape_fn((n, n, n, n), |(i, j, l, m)| (0..n).map(|k| self.t[[i, j, k, l, m, k]]).sum())
    }

    pub fn frobenius(&self) -> f64 {
        self.t.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Blockwise antisymmetrized product `¹D∧¹D` with the `½` normalization of
/// the 2-RDM: `aa = ½(Dα_ik Dα_jl − Dα_il Dα_jk)`, `ab = ½ Dα_ik Dβ_jl`.
pub fn wedge(d1: &Rdm1) -> SpinBlocks {
    let r = d1.norb();
    let same = |d: &Array2<f64>| {
        Array4::from_shape_fn((r, r, r, r), |(i, j, k, l)| 0.5 * (d[[i, k]] * d[[j, l]] - d[[i, l]] * d[[j, k]]))
    };
    let ab = Array4::from_shape_fn((r, r, r, r), |(i, j, k, l)| 0.5 * d1.a[[i, k]] * d1.b[[j, l]]);
    SpinBlocks { aa: same(&d1.a), ab, bb: same(&d1.b) }
}

/// Aufbau determinant: the first `n_σ` orbitals are occupied in each spin.
pub fn hf_reference(space: &OrbitalSpace) -> Result<(Rdm1, Rdm2)> {
    let r = space.norb();
    let proj = |n: usize| Array2::from_shape_fn((r, r), |(i, k)| if i == k && i < n { 1.0 } else { 0.0 });
    let d1 = Rdm1 { a: proj(space.n_alpha()), b: proj(space.n_beta()) };
    let d2 = Rdm2(wedge(&d1));
    Ok((d1, d2))
}

/// `¹D_α^i_k = 2(Σ_j aa^{ij}_{kj} + Σ_j ab^{ij}_{kj})/(N−1)`, and for β the
/// `bb` block with the β-first mixed sector `Σ_j ab^{ji}_{jk}`.
pub fn partial_trace_2to1(d2: &Rdm2, space: &OrbitalSpace) -> Result<Rdm1> {
    space.require_pairs()?;
    let r = d2.norb();
    if space.norb() != r {
        return Err(Error::Dimension(format!("2-RDM has {r} orbitals, space has {}", space.norb())));
    }
    let f = 2.0 / (space.n_electrons() as f64 - 1.0);
    let mut a = Array2::zeros((r, r));
    let mut b = Array2::zeros((r, r));
    for i in 0..r {
        for k in 0..r {
            let mut sa = 0.0;
            let mut sb = 0.0;
            for j in 0..r {
                sa += d2.aa[[i, j, k, j]] + d2.ab[[i, j, k, j]];
                sb += d2.bb[[i, j, k, j]] + d2.ab[[j, i, j, k]];
            }
            a[[i, k]] = f * sa;
            b[[i, k]] = f * sb;
        }
    }
    Ok(Rdm1 { a, b })
}

pub fn cumulant2(d2: &Rdm2, d1: &Rdm1) -> Result<Cumulant2> {
    if d1.norb() != d2.norb() {
        return Err(Error::Dimension(format!("1-RDM has {} orbitals, 2-RDM has {}", d1.norb(), d2.norb())));
    }
    let w = wedge(d1);
    Ok(Cumulant2(d2.zip_with(&w, |x, y| x - y)))
}

fn sym_eigenvalues_desc(m: &Array2<f64>, what: &str) -> Result<Vec<f64>> {
    let n = m.nrows();
    let asym = Zip::from(m).and(&m.t()).fold(0.0f64, |acc, x, y| acc.max((x - y).abs()));
    if asym > 1e-8 {
        return Err(Error::Validation(format!("{what} is not symmetric (max |D − Dᵀ| = {asym:.3e})")));
    }
    let mat = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[[i, j]] + m[[j, i]]));
    let mut ev: Vec<f64> = SymmetricEigen::new(mat).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    Ok(ev)
}

/// Descending eigenvalues of `¹D_α` and `¹D_β`.
pub fn natural_occupations(d1: &Rdm1) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok((sym_eigenvalues_desc(&d1.a, "1-RDM α block")?, sym_eigenvalues_desc(&d1.b, "1-RDM β block")?))
}

/// Descending eigenvalues of `¹D_α + ¹D_β`.
pub fn spin_summed_occupations(d1: &Rdm1) -> Result<Vec<f64>> {
    sym_eigenvalues_desc(&d1.spin_summed(), "spin-summed 1-RDM")
}

/// One named identity from [`validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

/// Tolerances applied by [`validate`].
#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub trace: f64,
    pub symmetry: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { trace: 1e-6, symmetry: 1e-8 }
    }
}

/// Evaluate every trace and symmetry identity on an RDM pair.
pub fn validate(d1: &Rdm1, d2: &Rdm2, space: &OrbitalSpace, tol: Tolerances) -> Result<Vec<Check>> {
    let r = space.norb();
    if d1.norb() != r || d2.norb() != r {
        return Err(Error::Dimension(format!(
            "space has {r} orbitals, RDMs have {} / {}",
            d1.norb(),
            d2.norb()
        )));
    }
    let (na, nb) = (space.n_alpha() as f64, space.n_beta() as f64);
    let [ta, tb] = d1.traces();
    let [taa, tab, tbb] = d2.traces();
    let mut checks = Vec::new();
    let mut push = |name: &str, deviation: f64, tolerance: f64| {
        checks.push(Check { name: name.to_string(), deviation, tolerance })
    };
    push("Tr 1D_a = n_a", (ta - na).abs(), tol.trace);
    push("Tr 1D_b = n_b", (tb - nb).abs(), tol.trace);
    push("Tr 2D_aa = n_a(n_a-1)/2", (taa - na * (na - 1.0) / 2.0).abs(), tol.trace);
    push("Tr 2D_ab = n_a n_b/2", (tab - na * nb / 2.0).abs(), tol.trace);
    push("Tr 2D_bb = n_b(n_b-1)/2", (tbb - nb * (nb - 1.0) / 2.0).abs(), tol.trace);
    let sym1 = |m: &Array2<f64>| Zip::from(m).and(&m.t()).fold(0.0f64, |acc, x, y| acc.max((x - y).abs()));
    push("1D_a symmetric", sym1(&d1.a), tol.symmetry);
    push("1D_b symmetric", sym1(&d1.b), tol.symmetry);
    for (name, b) in ["2D_aa", "2D_ab", "2D_bb"].iter().zip(d2.blocks()) {
        let t = b.view().permuted_axes([2, 3, 0, 1]);
        let v = Zip::from(b).and(&t).fold(0.0f64, |m, x, y| m.max((x - y).abs()));
        push(&format!("{name} Hermitian"), v, tol.symmetry);
    }
    for (name, b) in [("2D_aa", &d2.aa), ("2D_bb", &d2.bb)] {
        let v = SpinBlocks { aa: b.clone(), ab: Array4::zeros(b.raw_dim()), bb: Array4::zeros(b.raw_dim()) }
            .antisymmetry_violation();
        push(&format!("{name} antisymmetric"), v, tol.symmetry);
    }
    Ok(checks)
}

/// [`validate`] collapsed to an error naming every failed identity.
pub fn ensure_valid(d1: &Rdm1, d2: &Rdm2, space: &OrbitalSpace, tol: Tolerances) -> Result<()> {
    let failed: Vec<String> = validate(d1, d2, space, tol)?
        .into_iter()
        .filter(|c| !c.passed())
        .map(|c| format!("{} (deviation {:.3e} > {:.0e})", c.name, c.deviation, c.tolerance))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(failed.join("; ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(r: usize, na: usize, nb: usize) -> OrbitalSpace {
        OrbitalSpace::new(r, na, nb).unwrap()
    }

    #[test]
    fn single_alpha_electron_has_empty_aa() {
        let (d1, d2) = hf_reference(&space(2, 1, 1)).unwrap();
        assert_eq!(d1.a, ndarray::arr2(&[[1.0, 0.0], [0.0, 0.0]]));
        assert!(d2.aa.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn hf_traces() {
        let s = space(5, 3, 2);
        let (d1, d2) = hf_reference(&s).unwrap();
        assert_eq!(d2.traces(), [3.0, 3.0, 1.0]);
        assert_eq!(d1.traces(), [3.0, 2.0]);
        assert!(ensure_valid(&d1, &d2, &s, Tolerances::default()).is_ok());
    }

    #[test]
    fn hf_cumulant_vanishes_and_partial_trace_closes() {
        for (r, na, nb) in [(2, 1, 1), (4, 2, 1), (5, 3, 3), (3, 2, 0)] {
            let s = space(r, na, nb);
            let (d1, d2) = hf_reference(&s).unwrap();
            assert!(cumulant2(&d2, &d1).unwrap().frobenius() < 1e-14);
            let back = partial_trace_2to1(&d2, &s).unwrap();
            assert!((&back.a - &d1.a).iter().all(|x| x.abs() < 1e-14));
            assert!((&back.b - &d1.b).iter().all(|x| x.abs() < 1e-14));
        }
    }

    #[test]
    fn spin_orbital_round_trip() {
        let (_, d2) = hf_reference(&space(3, 2, 1)).unwrap();
        let so = d2.to_spin_orbital();
        assert_eq!(SpinBlocks::from_spin_orbital(&so), d2.0);
        let n = so.len_of(Axis(0));
        for p in 0..n {
            for q in 0..n {
                for u in 0..n {
                    for v in 0..n {
                        assert_eq!(so[[p, q, u, v]], -so[[q, p, u, v]]);
                        assert_eq!(so[[p, q, u, v]], so[[u, v, p, q]]);
                    }
                }
            }
        }
        assert!((d2.so_dot(&d2) - so.iter().map(|x| x * x).sum::<f64>()).abs() < 1e-14);
    }

    #[test]
    fn occupations() {
        let (d1, _) = hf_reference(&space(4, 2, 1)).unwrap();
        let (a, b) = natural_occupations(&d1).unwrap();
        assert_eq!(a, vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(b, vec![1.0, 0.0, 0.0, 0.0]);
        let c = Rdm1 { a: 0.3 * Array2::eye(3), b: 0.3 * Array2::eye(3) };
        assert!(natural_occupations(&c).unwrap().0.iter().all(|x| (x - 0.3).abs() < 1e-15));
        let mut bad = c.clone();
        bad.a[[0, 1]] = 1e-6;
        assert!(natural_occupations(&bad).is_err());
    }

    #[test]
    fn validate_flags_only_broken_identity() {
        let s = space(3, 2, 1);
        let (d1, mut d2) = hf_reference(&s).unwrap();
        d2.ab[[0, 0, 0, 0]] += 0.1;
        let failed: Vec<_> = validate(&d1, &d2, &s, Tolerances::default())
            .unwrap()
            .into_iter()
            .filter(|c| !c.passed())
            .map(|c| c.name)
            .collect();
        assert_eq!(failed, vec!["Tr 2D_ab = n_a n_b/2"]);
    }

    #[test]
    fn rank6_cap() {
        assert!(Rdm3::zeros(6).is_ok());
        assert!(matches!(Rdm3::zeros(7), Err(Error::SizeCap(_))));
    }
}

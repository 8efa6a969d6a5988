//! Cumulant reconstructions of the three-electron RDM.
//!
//! The explicit rank-6 forms here are test-scale only (capped at 12 spin
//! orbitals); the solver consumes the same functionals through the fused
//! contractions in [`crate::residual`].

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use ndarray::{Array2, Array4, Array6, Axis};

use crate::error::{Error, Result};
use crate::hamio::OrbitalSpace;
use crate::rdm::{check_rank6_cap, wedge, Cumulant2, Rdm1, Rdm3, SpinBlocks};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReconstructionKind {
    Valdemoro,
    NakatsujiYasuda,
}

impl FromStr for ReconstructionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "v" | "valdemoro" => Ok(Self::Valdemoro),
            "ny" | "nakatsuji-yasuda" => Ok(Self::NakatsujiYasuda),
            _ => Err(Error::Config(format!("unknown reconstruction '{s}' (expected v or ny)"))),
        }
    }
}

impl fmt::Display for ReconstructionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Valdemoro => "V",
            Self::NakatsujiYasuda => "NY",
        })
    }
}

/// `M^{ij}_{rq} = 3·²Δ^{ij}_{rq} + ½(¹D^i_r ¹D^j_q − ¹D^j_r ¹D^i_q)` per spin block.
#[derive(Clone, Debug, PartialEq)]
pub struct MMatrix(pub SpinBlocks);

impl Deref for MMatrix {
    type Target = SpinBlocks;
    fn deref(&self) -> &SpinBlocks {
        &self.0
    }
}

pub fn build_m(dl2: &Cumulant2, d1: &Rdm1) -> Result<MMatrix> {
    if dl2.norb() != d1.norb() {
        return Err(Error::Dimension(format!("cumulant has {} orbitals, 1-RDM has {}", dl2.norb(), d1.norb())));
    }
    let w = wedge(d1);
    Ok(MMatrix(dl2.zip_with(&w, |x, y| 3.0 * x + y)))
}

/// Occupation signs `σ` (+1 occupied, −1 virtual) of the reference determinant.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupationSignature {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl OccupationSignature {
    /// Aufbau filling of the first `n_σ` orbitals.
    pub fn aufbau(space: &OrbitalSpace) -> Self {
        let fill = |n: usize| (0..space.norb()).map(|a| if a < n { 1.0 } else { -1.0 }).collect();
        Self { alpha: fill(space.n_alpha()), beta: fill(space.n_beta()) }
    }

    pub fn new(alpha: Vec<f64>, beta: Vec<f64>, space: &OrbitalSpace) -> Result<Self> {
        for (name, v, n) in [("alpha", &alpha, space.n_alpha()), ("beta", &beta, space.n_beta())] {
            if v.len() != space.norb() {
                return Err(Error::Dimension(format!("{name} signature has {} entries, expected {}", v.len(), space.norb())));
            }
            if v.iter().any(|&x| x != 1.0 && x != -1.0) {
                return Err(Error::Config(format!("{name} signature entries must be +1 or -1")));
            }
            let occ = v.iter().filter(|&&x| x == 1.0).count();
            if occ != n {
                return Err(Error::Config(format!("{name} signature marks {occ} occupied orbitals, expected {n}")));
            }
        }
        Ok(Self { alpha, beta })
    }

    pub fn norb(&self) -> usize {
        self.alpha.len()
    }

    pub fn spin_orbital(&self) -> Vec<f64> {
        self.alpha.iter().chain(&self.beta).copied().collect()
    }

    pub(crate) fn check(&self, norb: usize) -> Result<()> {
        if self.alpha.len() != norb || self.beta.len() != norb {
            return Err(Error::Dimension(format!(
                "occupation signature covers {} orbitals, tensors have {norb}",
                self.alpha.len()
            )));
        }
        Ok(())
    }
}

type Perm6 = [usize; 6];

// Transpositions of the upper triple (i ↔ p realised through M's antisymmetry)
// and of the lower triple, each with its sign.
fn antisymmetrize9(t0: &Array6<f64>, upper: [(Perm6, f64); 3], scale: f64) -> Array6<f64> {
    const LOWER: [(Perm6, f64); 3] =
        [([0, 1, 2, 3, 4, 5], 1.0), ([0, 1, 2, 5, 4, 3], -1.0), ([0, 1, 2, 3, 5, 4], -1.0)];
    let mut out = Array6::zeros(t0.raw_dim());
    for (pu, su) in upper {
        for (pl, sl) in LOWER {
            let perm: Perm6 = std::array::from_fn(|k| pu[pl[k]]);
            out.scaled_add(scale * su * sl, &t0.view().permuted_axes(perm));
        }
    }
    out
}

fn outer_pair_one(m: &Array4<f64>, d: &Array2<f64>) -> Array6<f64> {
    // T0[i,j,p,r,q,l] = M[i,j,r,q]·D[p,l]
    let n = d.nrows();
    Array6::from_shape_fn((n, n, n, n, n, n), |(i, j, p, r, q, l)| m[[i, j, r, q]] * d[[p, l]])
}

/// `³D^{ijp}_{rql} = (1/9)·Σ` of the nine signed `M·¹D` terms, with `³Δ`
/// neglected. Built as one outer product plus eight transposed copies.
pub fn reconstruct_3rdm_valdemoro(m: &MMatrix, d1: &Rdm1) -> Result<Rdm3> {
    check_rank6_cap(m.norb())?;
    if d1.norb() != m.norb() {
        return Err(Error::Dimension("M and 1-RDM orbital counts differ".into()));
    }
    let t0 = outer_pair_one(&m.to_spin_orbital(), &d1.to_spin_orbital());
    // M^{jp} D^i = −M^{pj} D^i: the i↔p transposition of T0 with a sign flip.
    let upper = [([0, 1, 2, 3, 4, 5], 1.0), ([0, 2, 1, 3, 4, 5], -1.0), ([2, 1, 0, 3, 4, 5], -1.0)];
    Rdm3::new(antisymmetrize9(&t0, upper, 1.0 / 9.0))
}

fn sigma_product(dl: &Array4<f64>, sig: &[f64]) -> Array6<f64> {
    // Q[i,j,p,r,q,l] = Σ_a σ_a Δ[i,a,r,q] Δ[j,p,a,l]
    let n = sig.len();
    let mut left = dl.view().permuted_axes([0, 2, 3, 1]).as_standard_layout().into_owned();
    for (a, mut lane) in left.axis_iter_mut(Axis(3)).enumerate() {
        lane *= sig[a];
    }
    let left = left.into_shape_with_order((n * n * n, n)).unwrap();
    let right = dl.view().permuted_axes([2, 0, 1, 3]).as_standard_layout().into_owned();
    let right = right.into_shape_with_order((n, n * n * n)).unwrap();
    let q = left.dot(&right).into_shape_with_order((n, n, n, n, n, n)).unwrap();
    // axes are [i,r,q,j,p,l]
    q.permuted_axes([0, 3, 4, 1, 2, 5]).as_standard_layout().into_owned()
}

/// NY three-body cumulant, nine-term form with the factor 4 of the collapsed
/// antisymmetrizer: `(1/6)·Σ_a σ_a·[4Δ^{ia}_{rq}Δ^{jp}_{al} − …]`.
pub fn ny_cumulant3(dl2: &Cumulant2, sig: &OccupationSignature) -> Result<Rdm3> {
    check_rank6_cap(dl2.norb())?;
    sig.check(dl2.norb())?;
    let q = sigma_product(&dl2.to_spin_orbital(), &sig.spin_orbital());
    let upper = [([0, 1, 2, 3, 4, 5], 1.0), ([1, 0, 2, 3, 4, 5], -1.0), ([2, 1, 0, 3, 4, 5], -1.0)];
    Rdm3::new(antisymmetrize9(&q, upper, 4.0 / 6.0))
}

const S3: [([usize; 3], f64); 6] = [
    ([0, 1, 2], 1.0),
    ([0, 2, 1], -1.0),
    ([1, 0, 2], -1.0),
    ([1, 2, 0], 1.0),
    ([2, 0, 1], 1.0),
    ([2, 1, 0], -1.0),
];

/// NY cumulant from the unsimplified antisymmetrizer: all 36 signed
/// permutations of the upper and lower triples, evaluated elementwise.
pub fn ny_cumulant3_unsimplified(dl2: &Cumulant2, sig: &OccupationSignature) -> Result<Rdm3> {
    check_rank6_cap(dl2.norb())?;
    sig.check(dl2.norb())?;
    let d = dl2.to_spin_orbital();
    let s = sig.spin_orbital();
    let n = s.len();
    let t = Array6::from_shape_fn((n, n, n, n, n, n), |(i, j, p, r, q, l)| {
        let up = [i, j, p];
        let lo = [r, q, l];
        let mut acc = 0.0;
        for (pu, su) in S3 {
            let (u0, u1, u2) = (up[pu[0]], up[pu[1]], up[pu[2]]);
            for (pl, sl) in S3 {
                let (v0, v1, v2) = (lo[pl[0]], lo[pl[1]], lo[pl[2]]);
                let mut sum_a = 0.0;
                for a in 0..n {
                    sum_a += s[a] * d[[u0, a, v0, v1]] * d[[u1, u2, a, v2]];
                }
                acc += su * sl * sum_a;
            }
        }
        acc / 6.0
    });
    Rdm3::new(t)
}

/// `³D_V + ³Δ_NY`.
pub fn reconstruct_3rdm(
    kind: ReconstructionKind,
    dl2: &Cumulant2,
    d1: &Rdm1,
    sig: Option<&OccupationSignature>,
) -> Result<Rdm3> {
    let mut d3 = reconstruct_3rdm_valdemoro(&build_m(dl2, d1)?, d1)?;
    if kind == ReconstructionKind::NakatsujiYasuda {
        let sig = sig.ok_or_else(|| Error::Config("NY reconstruction requires an occupation signature".into()))?;
        d3.t += &ny_cumulant3(dl2, sig)?.t;
    }
    Ok(d3)
}

/// Largest deviation from antisymmetry under transpositions of each triple.
pub fn rank6_antisymmetry_violation(t: &Array6<f64>) -> f64 {
    let swaps: [Perm6; 4] = [[1, 0, 2, 3, 4, 5], [0, 2, 1, 3, 4, 5], [0, 1, 2, 4, 3, 5], [0, 1, 2, 3, 5, 4]];
    swaps
        .iter()
        .map(|p| {
            let v = t.view().permuted_axes(*p);
            ndarray::Zip::from(t).and(&v).fold(0.0f64, |m, x, y| m.max((x + y).abs()))
        })
        .fold(0.0, f64::max)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdm::{cumulant2, hf_reference};

    fn hf(r: usize, na: usize, nb: usize) -> (OrbitalSpace, Rdm1, Cumulant2) {
        let s = OrbitalSpace::new(r, na, nb).unwrap();
        let (d1, d2) = hf_reference(&s).unwrap();
        let dl = cumulant2(&d2, &d1).unwrap();
        (s, d1, dl)
    }

    #[test]
    fn m_of_hf_projector() {
        let (_, d1, dl) = hf(3, 2, 2);
        let m = build_m(&dl, &d1).unwrap();
        assert_eq!(m.aa[[0, 1, 0, 1]], 0.5);
        assert_eq!(m.aa[[1, 1, 0, 2]], 0.0);
        assert_eq!(m.ab[[0, 1, 0, 1]], 0.5);
    }

    #[test]
    fn zero_cumulant_gives_zero_ny() {
        let (s, _, dl) = hf(3, 2, 1);
        let sig = OccupationSignature::aufbau(&s);
        assert!(ny_cumulant3(&dl, &sig).unwrap().frobenius() == 0.0);
    }

    #[test]
    fn signature_validation() {
        let s = OrbitalSpace::new(3, 2, 1).unwrap();
        let sig = OccupationSignature::aufbau(&s);
        assert_eq!(sig.alpha, vec![1.0, 1.0, -1.0]);
        assert_eq!(sig.beta, vec![1.0, -1.0, -1.0]);
        assert!(OccupationSignature::new(vec![1.0, 1.0, 1.0], sig.beta.clone(), &s).is_err());
        assert!(OccupationSignature::new(vec![1.0, 1.0], sig.beta.clone(), &s).is_err());
        assert!(OccupationSignature::new(vec![-1.0, 1.0, 1.0], sig.beta, &s).is_ok());
    }

    #[test]
    fn parse_kind() {
        assert_eq!("v".parse::<ReconstructionKind>().unwrap(), ReconstructionKind::Valdemoro);
        assert_eq!("NY".parse::<ReconstructionKind>().unwrap(), ReconstructionKind::NakatsujiYasuda);
        assert!("m".parse::<ReconstructionKind>().is_err());
    }
}

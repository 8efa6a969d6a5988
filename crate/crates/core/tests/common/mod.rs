#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use acse_core::fci::{DeterminantBasis, FciState};
use acse_core::hamio::{read_fcidump, IntegralSet, OrbitalSpace};
use acse_core::rdm::SpinBlocks;
use ndarray::{Array1, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn load(name: &str) -> (OrbitalSpace, IntegralSet) {
    read_fcidump(fixture(name)).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A normalized random vector in the determinant space.
pub fn random_state(space: &OrbitalSpace, rng: &mut impl Rng) -> FciState {
    let basis = Arc::new(DeterminantBasis::new(space).unwrap());
    let c = Array1::from_shape_fn(basis.len(), |_| rng.random_range(-1.0..1.0));
    FciState::from_vector(basis, c).unwrap()
}

/// Random pair-antisymmetric spin blocks with `T^{kl}_{ij} = s·T^{ij}_{kl}`.
pub fn random_operator(r: usize, s: f64, rng: &mut impl Rng) -> SpinBlocks {
    let mut gen = || Array4::from_shape_fn((r, r, r, r), |_| rng.random_range(-1.0..1.0));
    let mut t = SpinBlocks { aa: gen(), ab: gen(), bb: gen() };
    t.symmetrize(s);
    t
}

pub fn max_diff(a: &SpinBlocks, b: &SpinBlocks) -> f64 {
    a.blocks()
        .iter()
        .zip(b.blocks())
        .flat_map(|(x, y)| x.iter().zip(y.iter()).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

/// Random real integrals with the full eightfold symmetry.
pub fn random_integrals(r: usize, rng: &mut impl Rng) -> IntegralSet {
    use ndarray::Array2;
    let h = Array2::from_shape_fn((r, r), |_| rng.random_range(-1.0..1.0));
    let one = &h + &h.t();
    let mut chem = Array4::<f64>::zeros((r, r, r, r));
    for p in 0..r {
        for q in 0..=p {
            for s in 0..r {
                for t in 0..=s {
                    if p * (p + 1) / 2 + q < s * (s + 1) / 2 + t {
                        continue;
                    }
                    let v = rng.random_range(-0.5..0.5);
                    for (a, b, c, d) in [(p, q, s, t), (q, p, s, t), (p, q, t, s), (q, p, t, s), (s, t, p, q), (t, s, p, q), (s, t, q, p), (t, s, q, p)] {
                        chem[[a, b, c, d]] = v;
                    }
                }
            }
        }
    }
    // <pq|rs> = (pr|qs)
    let two = chem.permuted_axes([0, 2, 1, 3]).as_standard_layout().into_owned();
    IntegralSet { e_nuc: rng.random_range(0.0..1.0), one, two }
}

/// State vector supported on one determinant.
pub fn determinant_state(space: &OrbitalSpace, index: usize) -> FciState {
    let basis = Arc::new(DeterminantBasis::new(space).unwrap());
    let mut c = Array1::zeros(basis.len());
    c[index % basis.len()] = 1.0;
    FciState::from_vector(basis, c).unwrap()
}

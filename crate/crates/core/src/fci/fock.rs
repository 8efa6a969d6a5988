//! Sparse Fock-space vectors for brute-force expectation values.

use std::collections::BTreeMap;

use super::strings::parity_below;

pub(crate) type FockVec = BTreeMap<u64, f64>;

pub(crate) fn annihilate(v: &FockVec, p: usize) -> FockVec {
    let bit = 1u64 << p;
    v.iter()
        .filter(|(&s, _)| s & bit != 0)
        .map(|(&s, &c)| (s & !bit, parity_below(s, p) * c))
        .collect()
}

pub(crate) fn create(v: &FockVec, p: usize) -> FockVec {
    let bit = 1u64 << p;
    v.iter()
        .filter(|(&s, _)| s & bit == 0)
        .map(|(&s, &c)| (s | bit, parity_below(s, p) * c))
        .collect()
}

pub(crate) fn axpy(y: &mut FockVec, a: f64, x: &FockVec) {
    for (&s, &c) in x {
        *y.entry(s).or_insert(0.0) += a * c;
    }
}

pub(crate) fn dot(a: &FockVec, b: &FockVec) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().filter_map(|(s, &c)| large.get(s).map(|&d| c * d)).sum()
}

/// `Σ T[p,q,r,s] a†p a†q a_s a_r |v⟩` over `n` spin orbitals.
pub(crate) fn apply_two_body(v: &FockVec, n: usize, t: impl Fn(usize, usize, usize, usize) -> f64) -> FockVec {
    let mut out = FockVec::new();
    for r in 0..n {
        let ar = annihilate(v, r);
        if ar.is_empty() {
            continue;
        }
        for s in 0..n {
            let asr = annihilate(&ar, s);
            if asr.is_empty() {
                continue;
            }
            for q in 0..n {
                let mut cq: Option<FockVec> = None;
                for p in 0..n {
                    let c = t(p, q, r, s);
                    if c == 0.0 {
                        continue;
                    }
                    let cq = cq.get_or_insert_with(|| create(&asr, q));
                    axpy(&mut out, c, &create(cq, p));
                }
            }
        }
    }
    out
}

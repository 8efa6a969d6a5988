//! Spin-block-sparse tensors and pairwise contraction.
//!
//! A tensor is a map from a spin pattern (bit `i` set when axis `i` is β) to
//! a dense block over spatial orbitals. With [`Layout::SpinOrbital`] there is
//! a single block over `2r` spin orbitals and the pattern is always 0, so the
//! same contraction schedule runs unchanged on both layouts.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayD, Axis, IxDyn};
use rayon::prelude::*;

use crate::rdm::{Rdm1, SpinBlocks};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    SpinOrbital,
    SpinBlocked,
}

/// Per-axis sign vector, α and β halves over spatial orbitals.
#[derive(Clone, Debug)]
pub(crate) struct Signs {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

#[derive(Clone, Debug)]
pub(crate) struct BlockTensor {
    layout: Layout,
    rank: usize,
    blocks: BTreeMap<u8, ArrayD<f64>>,
}

// Pattern → (sign, permutation of the ab block) for the six spin-conserving
// sectors of a pair tensor with antisymmetric pairs.
const AB_SECTORS: [(u8, f64, [usize; 4]); 4] = [
    (0b1010, 1.0, [0, 1, 2, 3]),
    (0b0101, 1.0, [1, 0, 3, 2]),
    (0b0110, -1.0, [0, 1, 3, 2]),
    (0b1001, -1.0, [1, 0, 2, 3]),
];

struct Spec {
    a: Vec<u8>,
    b: Vec<u8>,
    out: Vec<u8>,
}

fn parse_spec(spec: &str) -> Spec {
    let (lhs, out) = spec.split_once("->").expect("contraction spec needs '->'");
    let (a, b) = lhs.split_once(',').expect("contraction spec needs two operands");
    let spec = Spec { a: a.bytes().collect(), b: b.bytes().collect(), out: out.bytes().collect() };
    for &c in &spec.out {
        assert!(
            spec.a.contains(&c) ^ spec.b.contains(&c),
            "output index '{}' must come from exactly one operand",
            c as char
        );
    }
    spec
}

fn pos(v: &[u8], c: u8) -> usize {
    v.iter().position(|&x| x == c).unwrap()
}

fn bit(p: u8, i: usize) -> u8 {
    (p >> i) & 1
}

impl BlockTensor {
    pub fn from_pairs(layout: Layout, t: &SpinBlocks) -> Self {
        let mut blocks = BTreeMap::new();
        match layout {
            Layout::SpinOrbital => {
                blocks.insert(0, t.to_spin_orbital().into_dyn());
            }
            Layout::SpinBlocked => {
                blocks.insert(0b0000, t.aa.clone().into_dyn());
                blocks.insert(0b1111, t.bb.clone().into_dyn());
                for (p, s, perm) in AB_SECTORS {
                    let b = t.ab.view().permuted_axes(perm).to_owned();
                    blocks.insert(p, (s * b).into_dyn());
                }
            }
        }
        Self { layout, rank: 4, blocks }
    }

    pub fn from_rdm1(layout: Layout, d: &Rdm1) -> Self {
        let mut blocks = BTreeMap::new();
        match layout {
            Layout::SpinOrbital => {
                blocks.insert(0, d.to_spin_orbital().into_dyn());
            }
            Layout::SpinBlocked => {
                blocks.insert(0b00, d.a.clone().into_dyn());
                blocks.insert(0b11, d.b.clone().into_dyn());
            }
        }
        Self { layout, rank: 2, blocks }
    }

    /// Extract the stored αα/αβ/ββ blocks of a rank-4 tensor.
    pub fn to_pairs(&self) -> SpinBlocks {
        assert_eq!(self.rank, 4);
        let get4 = |p: u8| {
            self.blocks
                .get(&p)
                .map(|b| b.clone().into_dimensionality::<ndarray::Ix4>().unwrap())
        };
        match self.layout {
            Layout::SpinOrbital => SpinBlocks::from_spin_orbital(&get4(0).unwrap()),
            Layout::SpinBlocked => {
                let n = self.norb();
                let z = || ndarray::Array4::zeros((n, n, n, n));
                SpinBlocks {
                    aa: get4(0b0000).unwrap_or_else(z),
                    ab: get4(0b1010).unwrap_or_else(z),
                    bb: get4(0b1111).unwrap_or_else(z),
                }
            }
        }
    }

    fn norb(&self) -> usize {
        let n = self.blocks.values().next().map_or(0, |b| b.len_of(Axis(0)));
        match self.layout {
            Layout::SpinOrbital => n / 2,
            Layout::SpinBlocked => n,
        }
    }

    /// `Σ` over the shared indices of `a` and `b`; output axes in the order
    /// given after `->`. Blocks whose shared spins disagree are skipped.
    pub fn contract(spec: &str, a: &Self, b: &Self) -> Self {
        assert_eq!(a.layout, b.layout);
        let s = parse_spec(spec);
        assert_eq!(s.a.len(), a.rank);
        assert_eq!(s.b.len(), b.rank);
        let summed: Vec<u8> = s.a.iter().copied().filter(|c| s.b.contains(c) && !s.out.contains(c)).collect();
        let free_a: Vec<u8> = s.a.iter().copied().filter(|c| s.out.contains(c)).collect();
        let free_b: Vec<u8> = s.b.iter().copied().filter(|c| s.out.contains(c)).collect();

        let mut jobs = Vec::new();
        for (&pa, ba) in &a.blocks {
            for (&pb, bb) in &b.blocks {
                if summed.iter().any(|&c| bit(pa, pos(&s.a, c)) != bit(pb, pos(&s.b, c))) {
                    continue;
                }
                let mut po = 0u8;
                for (i, &c) in s.out.iter().enumerate() {
                    let v = if let Some(k) = s.a.iter().position(|&x| x == c) { bit(pa, k) } else { bit(pb, pos(&s.b, c)) };
                    po |= v << i;
                }
                jobs.push((po, ba, bb));
            }
        }

        let perm_a: Vec<usize> = free_a.iter().chain(&summed).map(|&c| pos(&s.a, c)).collect();
        let perm_b: Vec<usize> = summed.iter().chain(&free_b).map(|&c| pos(&s.b, c)).collect();
        let inter: Vec<u8> = free_a.iter().chain(&free_b).copied().collect();
        let perm_out: Vec<usize> = s.out.iter().map(|&c| pos(&inter, c)).collect();

        let products: Vec<(u8, ArrayD<f64>)> = jobs
            .par_iter()
            .map(|&(po, ba, bb)| {
                let am = matricize(ba, &perm_a, free_a.len());
                let bm = matricize(bb, &perm_b, summed.len());
                let c = am.dot(&bm);
                let shape: Vec<usize> = perm_a[..free_a.len()]
                    .iter()
                    .map(|&k| ba.shape()[k])
                    .chain(perm_b[summed.len()..].iter().map(|&k| bb.shape()[k]))
                    .collect();
                let c = c.into_shape_with_order(IxDyn(&shape)).unwrap();
                let c = c.permuted_axes(IxDyn(&perm_out)).as_standard_layout().into_owned();
                (po, c)
            })
            .collect();

        let mut blocks: BTreeMap<u8, ArrayD<f64>> = BTreeMap::new();
        for (po, c) in products {
            match blocks.get_mut(&po) {
                Some(acc) => *acc += &c,
                None => {
                    blocks.insert(po, c);
                }
            }
        }
        Self { layout: a.layout, rank: s.out.len(), blocks }
    }

    /// Axis `i` of the result is axis `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.rank);
        let blocks = self
            .blocks
            .iter()
            .map(|(&p, b)| {
                let mut np = 0u8;
                for (i, &k) in perm.iter().enumerate() {
                    np |= bit(p, k) << i;
                }
                (np, b.view().permuted_axes(IxDyn(perm)).as_standard_layout().into_owned())
            })
            .collect();
        Self { layout: self.layout, rank: self.rank, blocks }
    }

    pub fn scaled(mut self, c: f64) -> Self {
        for b in self.blocks.values_mut() {
            *b *= c;
        }
        self
    }

    /// `self += c·other`.
    pub fn add_scaled(&mut self, c: f64, other: &Self) {
        assert_eq!(self.rank, other.rank);
        for (&p, b) in &other.blocks {
            match self.blocks.get_mut(&p) {
                Some(acc) => acc.scaled_add(c, b),
                None => {
                    self.blocks.insert(p, c * b);
                }
            }
        }
    }

    /// `self − s·self.permuted(perm)`.
    pub fn minus_permuted(&self, s: f64, perm: &[usize]) -> Self {
        let mut out = self.clone();
        out.add_scaled(-s, &self.permuted(perm));
        out
    }

    /// Multiply along `axis` by the per-orbital signs.
    pub fn scale_axis(&mut self, axis: usize, sig: &Signs) {
        let so: Vec<f64> = sig.alpha.iter().chain(&sig.beta).copied().collect();
        for (&p, b) in self.blocks.iter_mut() {
            let v: &[f64] = match self.layout {
                Layout::SpinOrbital => &so,
                Layout::SpinBlocked if bit(p, axis) == 0 => &sig.alpha,
                Layout::SpinBlocked => &sig.beta,
            };
            for (i, mut lane) in b.axis_iter_mut(Axis(axis)).enumerate() {
                lane *= v[i];
            }
        }
    }
}

fn matricize(b: &ArrayD<f64>, perm: &[usize], nrow_axes: usize) -> Array2<f64> {
    let shape = b.shape();
    let rows: usize = perm[..nrow_axes].iter().map(|&k| shape[k]).product();
    let cols: usize = perm[nrow_axes..].iter().map(|&k| shape[k]).product();
    let p = b.view().permuted_axes(IxDyn(perm));
    let data: Vec<f64> = if p.is_standard_layout() {
        p.as_slice().unwrap().to_vec()
    } else {
        p.iter().copied().collect()
    };
    Array2::from_shape_vec((rows, cols), data).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array4;

    fn sample(r: usize, seed: u64) -> SpinBlocks {
        let mut x = seed as f64;
        let mut next = move || {
            x = (x * 1.3 + 0.7).sin() * 10.0;
            x.fract()
        };
        let mut aa = Array4::from_shape_fn((r, r, r, r), |_| next());
        let mut bb = Array4::from_shape_fn((r, r, r, r), |_| next());
        let ab = Array4::from_shape_fn((r, r, r, r), |_| next());
        for b in [&mut aa, &mut bb] {
            let t = b.view().permuted_axes([1, 0, 2, 3]).to_owned();
            *b = &*b - &t;
            let t = b.view().permuted_axes([0, 1, 3, 2]).to_owned();
            *b = &*b - &t;
        }
        SpinBlocks { aa, ab, bb }
    }

    #[test]
    fn layouts_agree_on_contraction() {
        let (x, y) = (sample(2, 1), sample(2, 2));
        let specs = ["klrs,ijrs->ijkl", "iarq,kprq->iakp", "kprq,jpar->kqja"];
        for spec in specs {
            let d = BlockTensor::contract(
                spec,
                &BlockTensor::from_pairs(Layout::SpinOrbital, &x),
                &BlockTensor::from_pairs(Layout::SpinOrbital, &y),
            );
            let b = BlockTensor::contract(
                spec,
                &BlockTensor::from_pairs(Layout::SpinBlocked, &x),
                &BlockTensor::from_pairs(Layout::SpinBlocked, &y),
            );
            let so = d.blocks[&0].clone().into_dimensionality::<ndarray::Ix4>().unwrap();
            let r = 2;
            for (&p, blk) in &b.blocks {
                for ((i, j, k, l), v) in blk.clone().into_dimensionality::<ndarray::Ix4>().unwrap().indexed_iter() {
                    let idx = [i + r * bit(p, 0) as usize, j + r * bit(p, 1) as usize, k + r * bit(p, 2) as usize, l + r * bit(p, 3) as usize];
                    assert!((so[idx] - v).abs() < 1e-12, "{spec} pattern {p:04b}");
                }
            }
        }
    }

    #[test]
    fn pairs_round_trip() {
        let x = sample(3, 5);
        for layout in [Layout::SpinOrbital, Layout::SpinBlocked] {
            assert_eq!(BlockTensor::from_pairs(layout, &x).to_pairs(), x);
        }
    }
}

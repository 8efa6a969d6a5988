//! ACSE-RDM v1 text format.
//!
//! ```text
//! # ACSE-RDM v1
//! norb 2
//! nelec 1 1
//! block 1RDM a
//! 1 1 1.0
//! block 2RDM ab
//! 1 1 1 1 0.5
//! ```
//!
//! Indices are 1-based. Omitted entries are zero. An entry may stand for its
//! symmetry-equivalent partners (1-RDM: transpose; 2-RDM: pair exchange, and
//! for same-spin blocks the signed swaps within a pair). Explicit partners
//! must agree with each other to 1e-8.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::{Array2, Array4};

use super::{Rdm1, Rdm2, SpinBlocks};
use crate::error::{Error, Result};

const EXPANSION_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct RdmFile {
    pub norb: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub d1: Rdm1,
    pub d2: Rdm2,
}

pub fn read_rdm(path: impl AsRef<Path>) -> Result<RdmFile> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io { path: path.into(), source })?;
    parse_rdm(BufReader::new(file))
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Block {
    A,
    B,
    AA,
    AB,
    BB,
}

type Entries = HashMap<Vec<usize>, (f64, usize)>;

pub fn parse_rdm(reader: impl BufRead) -> Result<RdmFile> {
    let mut norb: Option<usize> = None;
    let mut nelec: Option<(usize, usize)> = None;
    let mut current: Option<Block> = None;
    let mut entries: HashMap<Block, Entries> = HashMap::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        let uint = |s: &str| s.parse::<usize>().map_err(|_| Error::parse(lineno, format!("expected a non-negative integer, got '{s}'")));
        match toks[0] {
            "norb" => {
                if toks.len() != 2 || norb.is_some() {
                    return Err(Error::parse(lineno, "expected a single 'norb R' line"));
                }
                let r = uint(toks[1])?;
                if r == 0 {
                    return Err(Error::parse(lineno, "norb must be positive"));
                }
                norb = Some(r);
            }
            "nelec" => {
                if toks.len() != 3 || nelec.is_some() {
                    return Err(Error::parse(lineno, "expected a single 'nelec NA NB' line"));
                }
                nelec = Some((uint(toks[1])?, uint(toks[2])?));
            }
            "block" => {
                let b = match (toks.get(1).copied(), toks.get(2).copied(), toks.len()) {
                    (Some("1RDM"), Some("a"), 3) => Block::A,
                    (Some("1RDM"), Some("b"), 3) => Block::B,
                    (Some("2RDM"), Some("aa"), 3) => Block::AA,
                    (Some("2RDM"), Some("ab"), 3) => Block::AB,
                    (Some("2RDM"), Some("bb"), 3) => Block::BB,
                    _ => return Err(Error::parse(lineno, format!("unknown block header '{t}'"))),
                };
                if norb.is_none() || nelec.is_none() {
                    return Err(Error::parse(lineno, "'norb' and 'nelec' must precede the first block"));
                }
                if entries.contains_key(&b) {
                    return Err(Error::parse(lineno, format!("block {b:?} appears twice")));
                }
                entries.insert(b, HashMap::new());
                current = Some(b);
            }
            first if first.as_bytes()[0].is_ascii_digit() => {
                let Some(b) = current else {
                    return Err(Error::parse(lineno, "entry outside any block"));
                };
                let rank = if matches!(b, Block::A | Block::B) { 2 } else { 4 };
                if toks.len() != rank + 1 {
                    return Err(Error::parse(lineno, format!("expected {rank} indices and a value")));
                }
                let r = norb.unwrap();
                let mut index = Vec::with_capacity(rank);
                for tok in &toks[..rank] {
                    let v = uint(tok)?;
                    if v < 1 || v > r {
                        return Err(Error::parse(lineno, format!("index {v} outside [1, {r}]")));
                    }
                    index.push(v - 1);
                }
                let value: f64 = toks[rank]
                    .replace(['D', 'd'], "E")
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("invalid number '{}'", toks[rank])))?;
                let block = entries.get_mut(&b).unwrap();
                if block.insert(index, (value, lineno)).is_some() {
                    return Err(Error::parse(lineno, "entry repeated within block"));
                }
            }
            _ => return Err(Error::parse(lineno, format!("unrecognized line '{t}'"))),
        }
    }

    let norb = norb.ok_or_else(|| Error::parse(0, "missing 'norb' line"))?;
    let (n_alpha, n_beta) = nelec.ok_or_else(|| Error::parse(0, "missing 'nelec' line"))?;
    let empty = HashMap::new();
    let get = |b: Block| entries.get(&b).unwrap_or(&empty);
    let d1 = Rdm1 { a: expand1(norb, get(Block::A))?, b: expand1(norb, get(Block::B))? };
    let mut blocks = SpinBlocks {
        aa: expand2(norb, get(Block::AA), true)?,
        ab: expand2(norb, get(Block::AB), false)?,
        bb: expand2(norb, get(Block::BB), true)?,
    };
    blocks.symmetrize(1.0);
    Ok(RdmFile { norb, n_alpha, n_beta, d1, d2: Rdm2(blocks) })
}

/// Reported at the later of the two lines.
fn conflict(line: usize, other: usize, a: f64, b: f64) -> Error {
    let (first, second, a, b) = if line < other { (line, other, b, a) } else { (other, line, a, b) };
    Error::parse(second, format!("symmetry violation: {a} vs {b} implied by line {first} (beyond {EXPANSION_TOL:.0e})"))
}

fn expand1(r: usize, e: &Entries) -> Result<Array2<f64>> {
    let mut m = Array2::zeros((r, r));
    for (idx, &(v, line)) in e {
        let (i, k) = (idx[0], idx[1]);
        match e.get(&vec![k, i]) {
            Some(&(w, other)) if (v - w).abs() > EXPANSION_TOL => return Err(conflict(line, other, v, w)),
            Some(_) => {}
            None => m[[k, i]] = v,
        }
        m[[i, k]] = v;
    }
    let t = m.t().to_owned();
    Ok(0.5 * (&m + &t))
}

fn partners(idx: &[usize], same_spin: bool) -> Vec<([usize; 4], f64)> {
    let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
    let mut out = vec![([i, j, k, l], 1.0), ([k, l, i, j], 1.0)];
    if same_spin {
        out.extend([
            ([j, i, k, l], -1.0),
            ([i, j, l, k], -1.0),
            ([j, i, l, k], 1.0),
            ([l, k, i, j], -1.0),
            ([k, l, j, i], -1.0),
            ([l, k, j, i], 1.0),
        ]);
    }
    out
}

fn expand2(r: usize, e: &Entries, same_spin: bool) -> Result<Array4<f64>> {
    let mut t = Array4::zeros((r, r, r, r));
    // Deterministic order so that filled values do not depend on hashing.
    let mut keys: Vec<&Vec<usize>> = e.keys().collect();
    keys.sort();
    for idx in keys {
        let (v, line) = e[idx];
        for (p, s) in partners(idx, same_spin) {
            match e.get(&p.to_vec()) {
                Some(&(w, other)) => {
                    if (s * v - w).abs() > EXPANSION_TOL {
                        return Err(conflict(line, other, s * v, w));
                    }
                }
                None => t[p] = s * v,
            }
        }
        t[[idx[0], idx[1], idx[2], idx[3]]] = v;
    }
    Ok(t)
}

/// Write canonical entries only: `i ≤ k` for 1-RDM blocks; for 2-RDM blocks
/// `(i,j) ≤ (k,l)`, plus `i < j`, `k < l` in the same-spin blocks.
pub fn write_rdm(mut w: impl Write, n_alpha: usize, n_beta: usize, d1: &Rdm1, d2: &Rdm2) -> std::io::Result<()> {
    let r = d1.norb();
    writeln!(w, "# ACSE-RDM v1")?;
    writeln!(w, "norb {r}")?;
    writeln!(w, "nelec {n_alpha} {n_beta}")?;
    for (tag, m) in [("a", &d1.a), ("b", &d1.b)] {
        writeln!(w, "block 1RDM {tag}")?;
        for i in 0..r {
            for k in i..r {
                let v = m[[i, k]];
                if v != 0.0 {
                    writeln!(w, "{} {} {v:.17e}", i + 1, k + 1)?;
                }
            }
        }
    }
    for (tag, b, same) in [("aa", &d2.aa, true), ("ab", &d2.ab, false), ("bb", &d2.bb, true)] {
        writeln!(w, "block 2RDM {tag}")?;
        for i in 0..r {
            for j in 0..r {
                for k in 0..r {
                    for l in 0..r {
                        if (i, j) > (k, l) || (same && (i >= j || k >= l)) {
                            continue;
                        }
                        let v = b[[i, j, k, l]];
                        if v != 0.0 {
                            writeln!(w, "{} {} {} {} {v:.17e}", i + 1, j + 1, k + 1, l + 1)?;
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

//! FCIDUMP reader and writer.
//!
//! Integral lines are `value i j k l` with 1-based indices in chemist order
//! `(ij|kl)`; `value i j 0 0` is a one-electron integral, `value 0 0 0 0` the
//! nuclear repulsion, and `value i 0 0 0` an orbital energy (ignored).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::{Array2, Array4};

use super::{IntegralSet, OrbitalSpace};
use crate::error::{Error, Result};

const DUPLICATE_TOL: f64 = 1e-12;

pub fn read_fcidump(path: impl AsRef<Path>) -> Result<(OrbitalSpace, IntegralSet)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io { path: path.into(), source })?;
    parse_fcidump(BufReader::new(file))
}

struct Header {
    norb: usize,
    nelec: usize,
    ms2: i64,
}

fn parse_header(text: &str, line: usize) -> Result<Header> {
    let normalized = text.replace(',', " ").replace('=', " = ");
    let tokens: Vec<&str> = normalized.split_whitespace().collect();
    let mut values: HashMap<String, Vec<&str>> = HashMap::new();
    let mut key: Option<String> = None;
    let mut i = 0;
    while i < tokens.len() {
        if tokens.get(i + 1) == Some(&"=") {
            let k = tokens[i].to_ascii_uppercase();
            values.insert(k.clone(), Vec::new());
            key = Some(k);
            i += 2;
            continue;
        }
        match &key {
            Some(k) => values.get_mut(k).unwrap().push(tokens[i]),
            None => return Err(Error::parse(line, format!("unexpected token '{}' in namelist", tokens[i]))),
        }
        i += 1;
    }
    let int = |name: &str, default: Option<i64>| -> Result<i64> {
        match values.get(name) {
            Some(v) if v.len() == 1 => v[0]
                .parse::<i64>()
                .map_err(|_| Error::parse(line, format!("{name} is not an integer: '{}'", v[0]))),
            Some(_) => Err(Error::parse(line, format!("{name} expects exactly one value"))),
            None => default.ok_or_else(|| Error::parse(line, format!("namelist is missing {name}"))),
        }
    };
    let norb = int("NORB", None)?;
    let nelec = int("NELEC", None)?;
    let ms2 = int("MS2", Some(0))?;
    if norb < 1 || nelec < 0 {
        return Err(Error::parse(line, format!("invalid NORB={norb} / NELEC={nelec}")));
    }
    Ok(Header { norb: norb as usize, nelec: nelec as usize, ms2 })
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    tok.replace(['D', 'd'], "E")
        .parse::<f64>()
        .map_err(|_| Error::parse(line, format!("invalid number '{tok}'")))
}

fn canonical_pair(i: usize, j: usize) -> (usize, usize) {
    (i.min(j), i.max(j))
}

fn canonical_quad(i: usize, j: usize, k: usize, l: usize) -> [usize; 4] {
    let a = canonical_pair(i, j);
    let b = canonical_pair(k, l);
    let (x, y) = if a <= b { (a, b) } else { (b, a) };
    [x.0, x.1, y.0, y.1]
}

/// Parse an FCIDUMP stream. The returned tensor is in physicist order with
/// all eight real-orbital permutations populated.
pub fn parse_fcidump(reader: impl BufRead) -> Result<(OrbitalSpace, IntegralSet)> {
    let mut header_text = String::new();
    let mut in_header = false;
    let mut header: Option<Header> = None;
    let mut e_nuc: Option<(f64, usize)> = None;
    let mut one: HashMap<(usize, usize), (f64, usize)> = HashMap::new();
    let mut two: HashMap<[usize; 4], (f64, usize)> = HashMap::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let trimmed = line.trim();
        if header.is_none() {
            if !in_header {
                if trimmed.is_empty() {
                    continue;
                }
                let upper = trimmed.to_ascii_uppercase();
                let Some(rest) = upper.strip_prefix("&FCI") else {
                    return Err(Error::parse(lineno, "expected '&FCI' namelist header"));
                };
                in_header = true;
                header_text.clear();
                header_text.push_str(rest);
            } else {
                header_text.push(' ');
                header_text.push_str(&trimmed.to_ascii_uppercase());
            }
            let end = header_text.find("&END").or_else(|| header_text.find('/'));
            if let Some(pos) = end {
                if !header_text[pos..].trim_start_matches("&END").trim_start_matches('/').trim().is_empty() {
                    return Err(Error::parse(lineno, "trailing text after namelist terminator"));
                }
                header = Some(parse_header(&header_text[..pos], lineno)?);
                in_header = false;
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let h = header.as_ref().unwrap();
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(Error::parse(lineno, format!("expected 'value i j k l', got {} fields", toks.len())));
        }
        let value = parse_value(toks[0], lineno)?;
        let mut idx4 = [0usize; 4];
        for (slot, tok) in idx4.iter_mut().zip(&toks[1..]) {
            let v: i64 = tok
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid index '{tok}'")))?;
            if v < 0 || v as usize > h.norb {
                return Err(Error::parse(lineno, format!("index {v} outside [1, {}]", h.norb)));
            }
            *slot = v as usize;
        }
        let [i, j, k, l] = idx4;
        let check = |prev: Option<&(f64, usize)>| -> Result<()> {
            if let Some(&(old, at)) = prev {
                if (old - value).abs() > DUPLICATE_TOL {
                    return Err(Error::parse(
                        lineno,
                        format!("conflicts with symmetry-equivalent entry on line {at} ({old} vs {value})"),
                    ));
                }
            }
            Ok(())
        };
        match (i, j, k, l) {
            (0, 0, 0, 0) => {
                check(e_nuc.as_ref())?;
                e_nuc = Some((value, lineno));
            }
            (_, 0, 0, 0) => {} // orbital energy
            (i, j, 0, 0) if i > 0 && j > 0 => {
                let key = canonical_pair(i - 1, j - 1);
                check(one.get(&key))?;
                one.insert(key, (value, lineno));
            }
            (i, j, k, l) if i > 0 && j > 0 && k > 0 && l > 0 => {
                let key = canonical_quad(i - 1, j - 1, k - 1, l - 1);
                check(two.get(&key))?;
                two.insert(key, (value, lineno));
            }
            _ => return Err(Error::parse(lineno, format!("invalid index pattern {i} {j} {k} {l}"))),
        }
    }

    let h = header.ok_or_else(|| Error::parse(0, "missing or unterminated &FCI namelist"))?;
    if (h.nelec as i64 + h.ms2).rem_euclid(2) != 0 || h.ms2.unsigned_abs() as usize > h.nelec {
        return Err(Error::parse(0, format!("NELEC={} and MS2={} have mismatched parity", h.nelec, h.ms2)));
    }
    let n_alpha = ((h.nelec as i64 + h.ms2) / 2) as usize;
    let n_beta = ((h.nelec as i64 - h.ms2) / 2) as usize;
    let space = OrbitalSpace::new(h.norb, n_alpha, n_beta)?;

    let r = h.norb;
    let mut h1 = Array2::zeros((r, r));
    for (&(p, q), &(v, _)) in &one {
        h1[[p, q]] = v;
        h1[[q, p]] = v;
    }
    let mut v2 = Array4::zeros((r, r, r, r));
    for (&[i, j, k, l], &(v, _)) in &two {
        for (a, b, c, d) in [
            (i, j, k, l),
            (j, i, k, l),
            (i, j, l, k),
            (j, i, l, k),
            (k, l, i, j),
            (l, k, i, j),
            (k, l, j, i),
            (l, k, j, i),
        ] {
            // (ab|cd) = <ac|bd>
            v2[[a, c, b, d]] = v;
        }
    }
    let ints = IntegralSet { e_nuc: e_nuc.map_or(0.0, |(v, _)| v), one: h1, two: v2 };
    Ok((space, ints))
}

/// Write unique integrals in chemist order with round-trip-safe formatting.
pub fn write_fcidump(mut w: impl Write, space: &OrbitalSpace, ints: &IntegralSet) -> std::io::Result<()> {
    let r = ints.norb();
    let ms2 = space.n_alpha() as i64 - space.n_beta() as i64;
    writeln!(w, " &FCI NORB={r},NELEC={},MS2={ms2},", space.n_electrons())?;
    writeln!(w, "  ORBSYM={}", vec!["1"; r].join(","))?;
    writeln!(w, "  ISYM=1,")?;
    writeln!(w, " &END")?;
    let chem = ints.chemist();
    for i in 0..r {
        for j in 0..=i {
            for k in 0..r {
                for l in 0..=k {
                    if (i * (i + 1) / 2 + j) < (k * (k + 1) / 2 + l) {
                        continue;
                    }
                    let v = chem[[i, j, k, l]];
                    if v != 0.0 {
                        writeln!(w, "{v:.17e} {} {} {} {}", i + 1, j + 1, k + 1, l + 1)?;
                    }
                }
            }
        }
    }
    for i in 0..r {
        for j in 0..=i {
            let v = ints.one[[i, j]];
            if v != 0.0 {
                writeln!(w, "{v:.17e} {} {} 0 0", i + 1, j + 1)?;
            }
        }
    }
    writeln!(w, "{:.17e} 0 0 0 0", ints.e_nuc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<(OrbitalSpace, IntegralSet)> {
        parse_fcidump(s.as_bytes())
    }

    #[test]
    fn single_orbital_mapping() {
        let (space, ints) = parse("&FCI NORB=1,NELEC=2,MS2=0\n&END\n0.5 1 1 1 1\n-1.0 1 1 0 0\n0.7 0 0 0 0\n").unwrap();
        assert_eq!((space.norb(), space.n_alpha(), space.n_beta()), (1, 1, 1));
        assert_eq!(ints.one[[0, 0]], -1.0);
        assert_eq!(ints.two[[0, 0, 0, 0]], 0.5);
        assert_eq!(ints.e_nuc, 0.7);
    }

    #[test]
    fn expands_eightfold_symmetry() {
        let (_, ints) = parse("&FCI NORB=4,NELEC=2,MS2=0,\n ORBSYM=1,1,1,1,\n ISYM=1\n/\n0.25 1 2 3 4\n").unwrap();
        let chem = ints.chemist();
        let perms = [
            [0, 1, 2, 3], [1, 0, 2, 3], [0, 1, 3, 2], [1, 0, 3, 2],
            [2, 3, 0, 1], [3, 2, 0, 1], [2, 3, 1, 0], [3, 2, 1, 0],
        ];
        for p in perms {
            assert_eq!(chem[p], 0.25);
        }
        assert_eq!(chem.iter().filter(|v| **v != 0.0).count(), 8);
        let v = &ints.two;
        for p in 0..4 {
            for q in 0..4 {
                for r in 0..4 {
                    for s in 0..4 {
                        assert_eq!(v[[p, q, r, s]], v[[r, s, p, q]]);
                        assert_eq!(v[[p, q, r, s]], v[[q, p, s, r]]);
                    }
                }
            }
        }
    }

    #[test]
    fn fortran_exponents_and_split_header() {
        let (space, ints) = parse(" &fci norb = 2 ,\n nelec=3, ms2=1,\n orbsym=1,1\n &end\n1.5D-01 2 2 0 0\n").unwrap();
        assert_eq!((space.n_alpha(), space.n_beta()), (2, 1));
        assert!((ints.one[[1, 1]] - 0.15).abs() < 1e-16);
    }

    #[test]
    fn error_paths() {
        let bad_range = parse("&FCI NORB=2,NELEC=2,MS2=0 &END\n1.0 3 1 1 1\n");
        assert!(matches!(bad_range, Err(Error::Parse { line: 2, .. })));
        let conflict = parse("&FCI NORB=2,NELEC=2 &END\n1.0 1 2 1 1\n1.1 2 1 1 1\n");
        assert!(matches!(conflict, Err(Error::Parse { line: 3, .. })));
        let same = parse("&FCI NORB=2,NELEC=2 &END\n1.0 1 2 1 1\n1.0 2 1 1 1\n");
        assert!(same.is_ok());
        assert!(parse("&FCI NORB=2,NELEC=3,MS2=0 &END\n").is_err());
        assert!(parse("&FCI NORB=2 &END\n").is_err());
        assert!(parse("NORB=2\n").is_err());
        assert!(parse("&FCI NORB=2,NELEC=2\n").is_err());
        assert!(parse("&FCI NORB=2,NELEC=2 &END\n1.0 1 2 1\n").is_err());
    }
}

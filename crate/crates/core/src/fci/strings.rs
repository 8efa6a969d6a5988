//! Occupation strings over spatial orbitals and their single excitations.

/// All `n`-electron strings over `r` orbitals in ascending bitmask order.
pub(crate) fn strings(r: usize, n: usize) -> Vec<u64> {
    let mut out = Vec::new();
    if n > r {
        return out;
    }
    if n == 0 {
        return vec![0];
    }
    // Gosper's hack walks combinations in increasing numeric order.
    let mut s: u64 = (1u64 << n) - 1;
    let limit = 1u64 << r;
    while s < limit {
        out.push(s);
        let c = s & s.wrapping_neg();
        let t = s + c;
        s = (((t ^ s) >> 2) / c) | t;
    }
    out
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// `(−1)^{#occupied below p}`.
#[inline]
pub(crate) fn parity_below(s: u64, p: usize) -> f64 {
    if (s & ((1u64 << p) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Apply `a_q` then `a†p`; `None` if the result vanishes.
#[inline]
pub(crate) fn excite(s: u64, p: usize, q: usize) -> Option<(u64, f64)> {
    if s & (1u64 << q) == 0 {
        return None;
    }
    let sign1 = parity_below(s, q);
    let s1 = s & !(1u64 << q);
    if s1 & (1u64 << p) != 0 {
        return None;
    }
    let sign2 = parity_below(s1, p);
    Some((s1 | (1u64 << p), sign1 * sign2))
}

/// One entry of `E_pq |J⟩ = sign |K⟩` for a spin string.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Link {
    pub pq: u32,
    pub target: u32,
    pub sign: f64,
}

/// For every string, all `(p,q)` with nonzero `a†p a_q |J⟩`, diagonal included.
pub(crate) fn link_table(r: usize, list: &[u64]) -> Vec<Vec<Link>> {
    list.iter()
        .map(|&s| {
            let mut links = Vec::new();
            for q in 0..r {
                if s & (1u64 << q) == 0 {
                    continue;
                }
                for p in 0..r {
                    if let Some((t, sign)) = excite(s, p, q) {
                        let target = list.binary_search(&t).expect("excitation leaves the string space");
                        links.push(Link { pq: (p * r + q) as u32, target: target as u32, sign });
                    }
                }
            }
            links
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_in_order() {
        let s = strings(4, 2);
        assert_eq!(s, vec![0b0011, 0b0101, 0b0110, 0b1001, 0b1010, 0b1100]);
        assert_eq!(s.len(), binomial(4, 2));
        assert_eq!(strings(3, 0), vec![0]);
        assert_eq!(binomial(12, 3), 220);
    }

    #[test]
    fn excitation_signs() {
        // a†0 a_2 on |1,2⟩ = a†1 a†2|0⟩ → a†0 a†1 |0⟩ with sign (−1)^1·(−1)^0
        assert_eq!(excite(0b110, 0, 2), Some((0b011, -1.0)));
        assert_eq!(excite(0b110, 1, 1), Some((0b110, 1.0)));
        assert_eq!(excite(0b110, 2, 1), None);
        assert_eq!(excite(0b110, 0, 0), None);
    }
}

#![allow(dead_code)]

/// Positive fraction `n/d` with small terms.
pub type Q = (u128, u128);

pub fn less(a: Q, b: Q) -> bool {
    a.0 * b.1 < b.0 * a.1
}

/// `(p_{n-1}, q_{n-1}, p_n, q_n)` for a word.
pub fn mobius(word: &[u64]) -> (u128, u128, u128, u128) {
    let (mut pp, mut qp, mut p, mut q) = (1u128, 0u128, 0u128, 1u128);
    for &a in word {
        let a = a as u128;
        (pp, qp, p, q) = (p, q, a * p + pp, a * q + qp);
    }
    (pp, qp, p, q)
}

/// Image of `(lo, hi)` under `y -> (pp y + p) / (qp y + q)`, as an ordered pair.
pub fn image(word: &[u64], lo: Q, hi: Q) -> (Q, Q) {
    let (pp, qp, p, q) = mobius(word);
    let f = |y: Q| (pp * y.0 + p * y.1, qp * y.0 + q * y.1);
    let (a, b) = (f(lo), f(hi));
    if less(a, b) {
        (a, b)
    } else {
        (b, a)
    }
}

/// Open interval of the cylinder of `word`.
pub fn cylinder(word: &[u64]) -> (Q, Q) {
    image(word, (0, 1), (1, 1))
}

/// `[a] ∩ T^{-k}[a]` as an open interval, found by intersecting `[a]` with
/// the image of `[a]` under the inverse branch of the first `k` digits.
pub fn overlap_interval(word: &[u64], k: usize) -> Option<(Q, Q)> {
    let (alo, ahi) = cylinder(word);
    let (blo, bhi) = image(&word[..k], alo, ahi);
    let lo = if less(alo, blo) { blo } else { alo };
    let hi = if less(ahi, bhi) { ahi } else { bhi };
    less(lo, hi).then_some((lo, hi))
}

pub fn same(a: Q, b: Q) -> bool {
    a.0 * b.1 == b.0 * a.1
}

//! Certified digit extraction on multi-limb rationals.
//!
//! Endpoints are kept as little-endian `u64` limb vectors. Each chunk reads
//! 126-bit windows of both endpoints, widened outward so the window interval
//! contains the true one, certifies as many digits as the window allows, and
//! then applies the accumulated 2x2 matrix to the full numbers.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

const WINDOW_BITS: u64 = 126;
const MATRIX_BOUND: i128 = 1 << 61;

/// Interval `(lo_n/lo_d, hi_n/hi_d)` as limb vectors.
#[derive(Clone, Debug)]
pub(crate) struct Endpoints {
    pub lo_n: Vec<u64>,
    pub lo_d: Vec<u64>,
    pub hi_n: Vec<u64>,
    pub hi_d: Vec<u64>,
}

fn trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn bit_len(x: &[u64]) -> u64 {
    match x.iter().rposition(|&w| w != 0) {
        None => 0,
        Some(i) => 64 * i as u64 + (64 - x[i].leading_zeros() as u64),
    }
}

/// `floor(x / 2^s)`, assumed to fit in 128 bits.
fn shr_u128(x: &[u64], s: u64) -> u128 {
    let li = (s / 64) as usize;
    let off = (s % 64) as u32;
    let get = |i: usize| x.get(i).copied().unwrap_or(0) as u128;
    if off == 0 {
        get(li) | (get(li + 1) << 64)
    } else {
        (get(li) >> off) | (get(li + 1) << (64 - off)) | (get(li + 2) << (128 - off))
    }
}

/// Lower window `a/b <= n/d`.
fn window_lo(n: &[u64], d: &[u64]) -> (u128, u128) {
    let bl = bit_len(d);
    if bl <= WINDOW_BITS {
        (shr_u128(n, 0), shr_u128(d, 0))
    } else {
        let s = bl - WINDOW_BITS;
        (shr_u128(n, s), shr_u128(d, s) + 1)
    }
}

/// Upper window `c/e >= n/d`, clamped to at most 1.
fn window_hi(n: &[u64], d: &[u64]) -> (u128, u128) {
    let bl = bit_len(d);
    if bl <= WINDOW_BITS {
        (shr_u128(n, 0), shr_u128(d, 0))
    } else {
        let s = bl - WINDOW_BITS;
        let e = shr_u128(d, s);
        ((shr_u128(n, s) + 1).min(e), e)
    }
}

/// `(n', d') = M (n, d)` for one endpoint, written into `out_n`, `out_d`.
///
/// The caller guarantees both results are nonnegative and `|m_ij| < 2^61`.
/// Rows of a chunk matrix have entries of opposite sign (or a zero entry).
fn apply_matrix(m: &[[i128; 2]; 2], n: &mut Vec<u64>, d: &mut Vec<u64>, out_n: &mut Vec<u64>, out_d: &mut Vec<u64>) {
    let len = n.len().max(d.len());
    n.resize(len, 0);
    d.resize(len, 0);
    out_n.clear();
    out_d.clear();
    out_n.resize(len + 1, 0);
    out_d.resize(len + 1, 0);
    debug_assert!(m.iter().all(|r| r[0] * r[1] <= 0));
    // a row is (+p x - q y) when its first entry is positive
    let row_neg_x = |r: [i128; 2]| r[0] < 0 || (r[0] == 0 && r[1] > 0);
    match (row_neg_x(m[0]), row_neg_x(m[1])) {
        (false, false) => combine::<false, false>(m, n, d, out_n, out_d),
        (false, true) => combine::<false, true>(m, n, d, out_n, out_d),
        (true, false) => combine::<true, false>(m, n, d, out_n, out_d),
        (true, true) => combine::<true, true>(m, n, d, out_n, out_d),
    }
    trim(out_n);
    trim(out_d);
}

#[inline(always)]
fn combine<const NEG_X0: bool, const NEG_X1: bool>(
    m: &[[i128; 2]; 2],
    n: &[u64],
    d: &[u64],
    out_n: &mut [u64],
    out_d: &mut [u64],
) {
    let abs = |v: i128| v.unsigned_abs() as u64 as u128;
    let (a0, a1, b0, b1) = (abs(m[0][0]), abs(m[0][1]), abs(m[1][0]), abs(m[1][1]));
    let len = n.len();
    let (mut cn, mut cd): (i128, i128) = (0, 0);
    for i in 0..len {
        let (x, y) = (n[i] as u128, d[i] as u128);
        let vn = if NEG_X0 { cn + (a1 * y) as i128 - (a0 * x) as i128 } else { cn + (a0 * x) as i128 - (a1 * y) as i128 };
        let vd = if NEG_X1 { cd + (b1 * y) as i128 - (b0 * x) as i128 } else { cd + (b0 * x) as i128 - (b1 * y) as i128 };
        out_n[i] = vn as u64;
        out_d[i] = vd as u64;
        cn = vn >> 64;
        cd = vd >> 64;
    }
    assert!(cn >= 0 && cd >= 0, "negative linear combination in digit extraction");
    out_n[len] = cn as u64;
    out_d[len] = cd as u64;
}

struct Chunk {
    count: usize,
    m: [[i128; 2]; 2],
}

/// `floor(num / den)` for `den > 0`, by subtraction when the quotient is small.
fn quotient(num: u128, den: u128) -> u128 {
    let mut r = num;
    for q in 0..4 {
        if r < den {
            return q;
        }
        r -= den;
    }
    num / den
}

fn chunk(e: &Endpoints, room: usize, out: &mut Vec<u64>) -> Chunk {
    let (mut a, mut b) = window_lo(&e.lo_n, &e.lo_d);
    let (mut c, mut d) = window_hi(&e.hi_n, &e.hi_d);
    let mut m = [[1i128, 0], [0, 1]];
    let mut count = 0;
    while count < room && a != 0 {
        let q = quotient(d, c);
        // certified iff 1/lo <= q + 1, i.e. b - q a <= a
        let Some(r) = q.checked_mul(a).and_then(|qa| b.checked_sub(qa)) else { break };
        if r > a || q > u64::MAX as u128 {
            break;
        }
        let qi = q as i128;
        let r0 = m[1][0] - m[0][0] * qi;
        let r1 = m[1][1] - m[0][1] * qi;
        if r0.abs() >= MATRIX_BOUND || r1.abs() >= MATRIX_BOUND {
            break;
        }
        m = [[r0, r1], m[0]];
        out.push(q as u64);
        count += 1;
        (a, b, c, d) = (d - q * c, c, r, a);
    }
    Chunk { count, m }
}

fn to_big(x: &[u64]) -> BigUint {
    let mut words = Vec::with_capacity(2 * x.len());
    for &w in x {
        words.push(w as u32);
        words.push((w >> 32) as u32);
    }
    BigUint::new(words)
}

/// One exact digit on big integers. Returns false if no digit can be certified.
fn exact_step(e: &mut Endpoints, out: &mut Vec<u64>) -> bool {
    let lo_n = to_big(&e.lo_n);
    if lo_n.is_zero() {
        return false;
    }
    let lo_d = to_big(&e.lo_d);
    let hi_n = to_big(&e.hi_n);
    let hi_d = to_big(&e.hi_d);
    let (q, _) = hi_d.div_rem(&hi_n);
    let (ql, rl) = lo_d.div_rem(&lo_n);
    let ok = ql == q || (ql == &q + 1u32 && rl.is_zero());
    let Some(digit) = q.to_u64().filter(|_| ok) else { return false };
    let new_lo_n = &hi_d - &q * &hi_n;
    let new_hi_n = &lo_d - &q * &lo_n;
    *e = Endpoints {
        lo_n: new_lo_n.to_u64_digits(),
        lo_d: hi_n.to_u64_digits(),
        hi_n: new_hi_n.to_u64_digits(),
        hi_d: lo_n.to_u64_digits(),
    };
    out.push(digit);
    true
}

/// Appends certified digits to `out` until `max_count` or certification fails.
pub(crate) fn extract(e: &mut Endpoints, max_count: usize, out: &mut Vec<u64>) {
    for v in [&mut e.lo_n, &mut e.lo_d, &mut e.hi_n, &mut e.hi_d] {
        trim(v);
    }
    let target = out.len() + max_count;
    let mut spare = Endpoints { lo_n: Vec::new(), lo_d: Vec::new(), hi_n: Vec::new(), hi_d: Vec::new() };
    while out.len() < target {
        let ch = chunk(e, target - out.len(), out);
        if ch.count == 0 {
            if !exact_step(e, out) {
                break;
            }
            continue;
        }
        // each digit swaps the roles of the endpoints
        if ch.count.is_multiple_of(2) {
            apply_matrix(&ch.m, &mut e.lo_n, &mut e.lo_d, &mut spare.lo_n, &mut spare.lo_d);
            apply_matrix(&ch.m, &mut e.hi_n, &mut e.hi_d, &mut spare.hi_n, &mut spare.hi_d);
        } else {
            apply_matrix(&ch.m, &mut e.hi_n, &mut e.hi_d, &mut spare.lo_n, &mut spare.lo_d);
            apply_matrix(&ch.m, &mut e.lo_n, &mut e.lo_d, &mut spare.hi_n, &mut spare.hi_d);
        }
        std::mem::swap(e, &mut spare);
    }
}

//! Hurwitz zeta function and the measure of digit-tuple tails.

use crate::cf::MeasureLaw;

const BERNOULLI_2J: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// `zeta(s, q) = sum_{k>=0} (q+k)^{-s}` for `s > 1`, `q > 0` (Euler-Maclaurin).
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    assert!(s > 1.0 && q > 0.0, "hurwitz_zeta needs s > 1, q > 0");
    let n = 16 + s.ceil() as usize;
    let mut head = 0.0;
    for k in (0..n).rev() {
        head += (q + k as f64).powf(-s);
    }
    let a = q + n as f64;
    let mut tail = a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    // rising factorial s(s+1)...(s+2j-2) / (2j)!, times a^{-s-2j+1}
    let mut coef = s / 2.0;
    let mut pow = a.powf(-s - 1.0);
    for (j, b) in BERNOULLI_2J.iter().enumerate() {
        let term = b * coef * pow;
        tail += term;
        if term.abs() < 1e-18 * tail.abs() {
            break;
        }
        let j = (j + 1) as f64;
        coef *= (s + 2.0 * j - 1.0) * (s + 2.0 * j) / ((2.0 * j + 1.0) * (2.0 * j + 2.0));
        pow /= a * a;
    }
    head + tail
}

const TUPLE_TERMS: usize = 80;

/// Gauss measure of `{a_1, ..., a_m >= k}`.
pub fn gauss_tuple_measure(m: usize, k: u64) -> f64 {
    tuple_measure(m, k, MeasureLaw::Gauss)
}

/// Measure of `{a_1, ..., a_m >= k}`.
///
/// Iterates the Lebesgue transfer operator restricted to `(0, 1/k)` on Taylor
/// coefficients at 0; the branch sums become Hurwitz zeta values.
pub fn tuple_measure(m: usize, k: u64, law: MeasureLaw) -> f64 {
    assert!(m >= 1 && k >= 1);
    if k == 1 {
        return 1.0;
    }
    let ln2 = std::f64::consts::LN_2;
    let kf = k as f64;
    let mut c: Vec<f64> = match law {
        MeasureLaw::Gauss => (0..TUPLE_TERMS).map(|i| if i % 2 == 0 { 1.0 / ln2 } else { -1.0 / ln2 }).collect(),
        MeasureLaw::Lebesgue => (0..TUPLE_TERMS).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
    };
    if m > 1 {
        // zeta(t, k) for t = 2 .. 2*TUPLE_TERMS
        let zeta: Vec<f64> = (0..2 * TUPLE_TERMS + 2).map(|t| if t >= 2 { hurwitz_zeta(t as f64, kf) } else { 0.0 }).collect();
        for _ in 1..m {
            let mut next = vec![0.0; TUPLE_TERMS];
            for (r, slot) in next.iter_mut().enumerate() {
                // binom(n+1+r, r) built incrementally in n
                let mut binom = (r + 1) as f64;
                let mut acc = 0.0;
                for (n, cn) in c.iter().enumerate() {
                    if n > 0 {
                        binom *= (n + 1 + r) as f64 / (n + 1) as f64;
                    }
                    acc += cn * binom * zeta[n + 2 + r];
                }
                *slot = if r % 2 == 0 { acc } else { -acc };
            }
            c = next;
        }
    }
    let u = 1.0 / kf;
    let mut mass = 0.0;
    let mut pow = u;
    for (n, cn) in c.iter().enumerate() {
        mass += cn * pow / (n + 1) as f64;
        pow *= u;
    }
    mass
}

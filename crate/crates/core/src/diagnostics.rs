//! Exhaustive checks of branch distortion and short returns to cylinders.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;

use crate::cf::{convergents, cylinder_measure, ratio_to_f64, Digits, MeasureLaw};
use crate::error::{Error, Result};

/// Derivative of the inverse branch `v_a` at `x`.
///
/// Lebesgue: `1/(q_{n-1} x + q_n)^2`. Gauss: that value times `h(v_a(x))/h(x)`
/// for the Gauss density `h`.
pub fn branch_derivative(word: &Digits, x: &BigRational, law: MeasureLaw) -> Result<f64> {
    let c = convergents(word)?;
    let n = c.len();
    let (p, q) = c.get(n);
    let (pp, qp) = c.get(n - 1);
    let big = |v| BigRational::from_integer(BigInt::from(v));
    let den = big(qp) * x + big(q);
    let leb = (&den * &den).recip();
    match law {
        MeasureLaw::Lebesgue => Ok(ratio_to_f64(&leb)),
        MeasureLaw::Gauss => {
            let vx = (big(pp) * x + big(p)) / &den;
            let one = BigRational::one();
            Ok(ratio_to_f64(&(leb * (&one + x) / (one + vx))))
        }
    }
}

fn small_derivative(q: u128, qp: u128, p: u128, pp: u128, x: f64) -> f64 {
    let den = qp as f64 * x + q as f64;
    let vx = (pp as f64 * x + p as f64) / den;
    (1.0 + x) / (1.0 + vx) / (den * den)
}

/// Extremes of a ratio over an exhaustive word family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReturnBoundReport {
    pub max_len: usize,
    pub max_digit: u64,
    pub worst_ratio: f64,
    pub worst_witness: (Digits, usize),
    /// Smallest ratio (distortion reports only).
    pub min_ratio: Option<f64>,
    pub min_witness: Option<(Digits, usize)>,
    /// `M` (distortion) or `M_1` (short returns).
    pub constant: f64,
    pub evaluated: u64,
}

/// Words of length `1..=max_len` over `1..=max_digit` starting with `first`, in lexicographic order.
fn words_starting(first: u64, max_len: usize, max_digit: u64) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut stack = vec![vec![first]];
    while let Some(w) = stack.pop() {
        if w.len() < max_len {
            for a in (1..=max_digit).rev() {
                let mut next = w.clone();
                next.push(a);
                stack.push(next);
            }
        }
        out.push(w);
    }
    out
}

#[derive(Clone)]
struct Extreme {
    value: f64,
    word: Vec<u64>,
    k: usize,
}

impl Extreme {
    /// Keeps the larger value; ties go to the lexicographically smaller witness.
    fn max(self, other: Extreme) -> Extreme {
        if other.value > self.value || (other.value == self.value && (&other.word, other.k) < (&self.word, self.k)) {
            other
        } else {
            self
        }
    }

    fn min(self, other: Extreme) -> Extreme {
        if other.value < self.value || (other.value == self.value && (&other.word, other.k) < (&self.word, self.k)) {
            other
        } else {
            self
        }
    }
}

fn check_family(max_len: usize, max_digit: u64) -> Result<()> {
    if max_len == 0 || max_digit == 0 {
        return Err(Error::domain("word family needs max_len >= 1 and max_digit >= 1"));
    }
    Ok(())
}

/// Range of `v'_a(x) / mu(a)` over all words `a` (length `<= max_len`, digits
/// `<= max_digit`) and `samples` equispaced points `x` in `[0, 1]`, Gauss law.
pub fn renyi_report(max_len: usize, max_digit: u64, samples: usize) -> Result<ReturnBoundReport> {
    check_family(max_len, max_digit)?;
    if samples < 2 {
        return Err(Error::domain("need at least 2 samples per cylinder"));
    }
    let xs: Vec<f64> = (0..samples).map(|i| i as f64 / (samples - 1) as f64).collect();
    let per_first: Vec<Result<(Extreme, Extreme, u64)>> = (1..=max_digit)
        .into_par_iter()
        .map(|first| {
            let mut hi = Extreme { value: f64::NEG_INFINITY, word: vec![], k: 0 };
            let mut lo = Extreme { value: f64::INFINITY, word: vec![], k: 0 };
            let mut count = 0u64;
            for w in words_starting(first, max_len, max_digit) {
                let (mut pp, mut qp, mut p, mut q) = (1u128, 0u128, 0u128, 1u128);
                for &a in &w {
                    let a = a as u128;
                    (pp, qp, p, q) = (p, q, a * p + pp, a * q + qp);
                }
                let mass = cylinder_measure(&w, MeasureLaw::Gauss);
                for (si, &x) in xs.iter().enumerate() {
                    let r = small_derivative(q, qp, p, pp, x) / mass;
                    if !r.is_finite() || r <= 0.0 {
                        return Err(Error::domain(format!("non-finite distortion ratio for {w:?} at x = {x}")));
                    }
                    count += 1;
                    hi = hi.max(Extreme { value: r, word: w.clone(), k: si });
                    lo = lo.min(Extreme { value: r, word: w.clone(), k: si });
                }
            }
            Ok((hi, lo, count))
        })
        .collect();
    let mut hi = Extreme { value: f64::NEG_INFINITY, word: vec![], k: 0 };
    let mut lo = Extreme { value: f64::INFINITY, word: vec![], k: 0 };
    let mut evaluated = 0;
    for r in per_first {
        let (h, l, c) = r?;
        hi = hi.max(h);
        lo = lo.min(l);
        evaluated += c;
    }
    Ok(ReturnBoundReport {
        max_len,
        max_digit,
        constant: hi.value.max(1.0 / lo.value),
        worst_ratio: hi.value,
        worst_witness: (Digits::new(hi.word)?, hi.k),
        min_ratio: Some(lo.value),
        min_witness: Some((Digits::new(lo.word)?, lo.k)),
        evaluated,
    })
}

/// Word whose cylinder is `[word] ∩ T^{-k} [word]`, or `None` when empty.
pub fn cylinder_self_overlap(word: &Digits, k: usize) -> Result<Option<Digits>> {
    let n = word.len();
    if k == 0 || k > n {
        return Err(Error::domain(format!("shift {k} outside 1..={n}")));
    }
    if word[k..] != word[..n - k] {
        return Ok(None);
    }
    let mut w = word[..k].to_vec();
    w.extend_from_slice(word);
    Ok(Some(Digits::new(w)?))
}

fn return_ratio(w: &[u64], k: usize) -> f64 {
    let n = w.len();
    let overlap = if w[k..] == w[..n - k] {
        let mut o = w[..k].to_vec();
        o.extend_from_slice(w);
        cylinder_measure(&o, MeasureLaw::Gauss)
    } else {
        0.0
    };
    overlap / cylinder_measure(w, MeasureLaw::Gauss).powf(1.0 + 1.0 / (1.0 + n as f64))
}

/// `mu(a ∩ T^{-k} a) / mu(a)^{1 + 1/(1+n)}` for one word `a` of length `n`.
pub fn short_return_ratio(word: &Digits, k: usize) -> Result<f64> {
    cylinder_self_overlap(word, k)?;
    Ok(return_ratio(word, k))
}

/// Largest `mu(a ∩ T^{-k} a) / mu(a)^{1 + 1/(1+n)}` over words `a` of length
/// `n <= max_len` with digits `<= max_digit` and shifts `1 <= k <= n`.
pub fn short_return_report(max_len: usize, max_digit: u64) -> Result<ReturnBoundReport> {
    check_family(max_len, max_digit)?;
    if max_len < 2 {
        return Err(Error::domain("short-return report needs max_len >= 2"));
    }
    let per_first: Vec<Result<(Extreme, u64)>> = (1..=max_digit)
        .into_par_iter()
        .map(|first| {
            let mut best = Extreme { value: f64::NEG_INFINITY, word: vec![], k: 0 };
            let mut count = 0u64;
            for w in words_starting(first, max_len, max_digit) {
                for k in 1..=w.len() {
                    let r = return_ratio(&w, k);
                    if !r.is_finite() {
                        return Err(Error::domain(format!("non-finite short-return ratio for {w:?}, k = {k}")));
                    }
                    count += 1;
                    best = best.max(Extreme { value: r, word: w.clone(), k });
                }
            }
            Ok((best, count))
        })
        .collect();
    let mut best = Extreme { value: f64::NEG_INFINITY, word: vec![], k: 0 };
    let mut evaluated = 0;
    for r in per_first {
        let (b, c) = r?;
        best = best.max(b);
        evaluated += c;
    }
    Ok(ReturnBoundReport {
        max_len,
        max_digit,
        worst_ratio: best.value,
        constant: best.value,
        worst_witness: (Digits::new(best.word)?, best.k),
        min_ratio: None,
        min_witness: None,
        evaluated,
    })
}

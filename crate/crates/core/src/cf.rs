//! Continued-fraction arithmetic on exact rationals.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A finite word of partial quotients `[a_1, ..., a_n]`, every entry at least 1.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct Digits(Vec<u64>);

impl Digits {
    pub fn new(values: Vec<u64>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|&a| a == 0) {
            return Err(Error::domain(format!("partial quotient at position {pos} is 0")));
        }
        Ok(Digits(values))
    }

    pub fn empty() -> Self {
        Digits(Vec::new())
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u64> {
        self.0
    }
}

impl Deref for Digits {
    type Target = [u64];
    fn deref(&self) -> &[u64] {
        &self.0
    }
}

impl TryFrom<Vec<u64>> for Digits {
    type Error = Error;
    fn try_from(v: Vec<u64>) -> Result<Self> {
        Digits::new(v)
    }
}

impl From<Digits> for Vec<u64> {
    fn from(d: Digits) -> Self {
        d.0
    }
}

impl fmt::Display for Digits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "]")
    }
}

/// Convergents `(p_k, q_k)` for `k = 1..=n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Convergents {
    pairs: Vec<(BigUint, BigUint)>,
}

impl Convergents {
    pub fn pairs(&self) -> &[(BigUint, BigUint)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `(p_k, q_k)` for `0 <= k <= n`, with `(p_0, q_0) = (0, 1)`.
    pub fn get(&self, k: usize) -> (BigUint, BigUint) {
        if k == 0 {
            (BigUint::zero(), BigUint::one())
        } else {
            self.pairs[k - 1].clone()
        }
    }

    /// `p_k q_{k-1} - p_{k-1} q_k` for `k >= 1`.
    pub fn determinant(&self, k: usize) -> BigInt {
        let (p, q) = self.get(k);
        let (pp, qp) = self.get(k - 1);
        BigInt::from(p * qp) - BigInt::from(pp * q)
    }
}

/// Convergents of a non-empty word.
pub fn convergents(word: &Digits) -> Result<Convergents> {
    if word.is_empty() {
        return Err(Error::domain("convergents of the empty word"));
    }
    let mut pairs = Vec::with_capacity(word.len());
    let (mut p_prev, mut q_prev) = (BigUint::one(), BigUint::zero());
    let (mut p, mut q) = (BigUint::zero(), BigUint::one());
    for &a in word.iter() {
        let p_next = &p * a + &p_prev;
        let q_next = &q * a + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
        pairs.push((p.clone(), q.clone()));
    }
    Ok(Convergents { pairs })
}

/// An open interval `(lo, hi)` with exact rational endpoints, `0 <= lo < hi <= 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalInterval {
    lo: BigRational,
    hi: BigRational,
}

impl RationalInterval {
    pub fn new(lo: BigRational, hi: BigRational) -> Result<Self> {
        if lo < BigRational::zero() || hi > BigRational::one() || lo >= hi {
            return Err(Error::domain(format!("invalid interval ({lo}, {hi})")));
        }
        Ok(RationalInterval { lo, hi })
    }

    /// Interval from integer numerator/denominator pairs.
    pub fn from_ratios(lo: (i64, i64), hi: (i64, i64)) -> Result<Self> {
        if lo.1 == 0 || hi.1 == 0 {
            return Err(Error::domain("zero denominator"));
        }
        Self::new(
            BigRational::new(lo.0.into(), lo.1.into()),
            BigRational::new(hi.0.into(), hi.1.into()),
        )
    }

    pub fn unit() -> Self {
        RationalInterval { lo: BigRational::zero(), hi: BigRational::one() }
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    /// Strict containment of a point.
    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo < x && x < &self.hi
    }

    /// True if `self` is a subset of `other`.
    pub fn within(&self, other: &RationalInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// Intersection, or `None` if it is empty.
    pub fn intersect(&self, other: &RationalInterval) -> Option<RationalInterval> {
        let lo = (&self.lo).max(&other.lo).clone();
        let hi = (&self.hi).min(&other.hi).clone();
        (lo < hi).then_some(RationalInterval { lo, hi })
    }
}

impl fmt::Display for RationalInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

/// Reference measure on (0,1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureLaw {
    Gauss,
    Lebesgue,
}

impl FromStr for MeasureLaw {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gauss" => Ok(MeasureLaw::Gauss),
            "lebesgue" => Ok(MeasureLaw::Lebesgue),
            other => Err(Error::domain(format!("unknown measure law {other:?}"))),
        }
    }
}

impl fmt::Display for MeasureLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasureLaw::Gauss => "gauss",
            MeasureLaw::Lebesgue => "lebesgue",
        })
    }
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `log2(1 + r)` for a nonnegative ratio `r`.
pub(crate) fn log2_1p(r: f64) -> f64 {
    r.ln_1p() / std::f64::consts::LN_2
}

/// Measure of an interval under the Gauss or Lebesgue law.
pub fn interval_measure<S: Real>(iv: &RationalInterval, law: MeasureLaw) -> S {
    let w = iv.width();
    let m = match law {
        MeasureLaw::Lebesgue => ratio_to_f64(&w),
        MeasureLaw::Gauss => {
            let r = w / (BigRational::one() + &iv.lo);
            log2_1p(ratio_to_f64(&r))
        }
    };
    S::of(m)
}

/// The open cylinder interval of a non-empty word.
pub fn cylinder_interval(word: &Digits) -> Result<RationalInterval> {
    let c = convergents(word)?;
    let n = c.len();
    let (p, q) = c.get(n);
    let (pp, qp) = c.get(n - 1);
    let a = BigRational::new(BigInt::from(p.clone()), BigInt::from(q.clone()));
    let b = BigRational::new(BigInt::from(p + pp), BigInt::from(q + qp));
    if a < b {
        RationalInterval::new(a, b)
    } else {
        RationalInterval::new(b, a)
    }
}

/// Measure of the cylinder of `word`, computed from its convergents.
///
/// The Gauss mass is `log2(1 + 1/X)` with an integer `X`, so the only rounding
/// happens in the final logarithm.
pub fn cylinder_measure(word: &[u64], law: MeasureLaw) -> f64 {
    if word.is_empty() {
        return 1.0;
    }
    if let Some(m) = cylinder_measure_u128(word, law) {
        return m;
    }
    let (mut pp, mut qp) = (BigUint::one(), BigUint::zero());
    let (mut p, mut q) = (BigUint::zero(), BigUint::one());
    for &a in word {
        let pn = &p * a + &pp;
        let qn = &q * a + &qp;
        pp = std::mem::replace(&mut p, pn);
        qp = std::mem::replace(&mut q, qn);
    }
    let x = match law {
        MeasureLaw::Lebesgue => &q * (&q + &qp),
        MeasureLaw::Gauss if word.len() % 2 == 1 => &q * (&q + &qp + &p + &pp),
        MeasureLaw::Gauss => (&q + &qp) * (&q + &p),
    };
    let xf = x.to_f64().unwrap_or(f64::INFINITY);
    match law {
        MeasureLaw::Lebesgue => 1.0 / xf,
        MeasureLaw::Gauss => log2_1p(1.0 / xf),
    }
}

fn cylinder_measure_u128(word: &[u64], law: MeasureLaw) -> Option<f64> {
    let (mut pp, mut qp) = (1u128, 0u128);
    let (mut p, mut q) = (0u128, 1u128);
    for &a in word {
        let a = a as u128;
        let pn = p.checked_mul(a)?.checked_add(pp)?;
        let qn = q.checked_mul(a)?.checked_add(qp)?;
        pp = p;
        qp = q;
        p = pn;
        q = qn;
    }
    let x = match law {
        MeasureLaw::Lebesgue => q.checked_mul(q.checked_add(qp)?)?,
        MeasureLaw::Gauss if word.len() % 2 == 1 => q.checked_mul(q.checked_add(qp)?.checked_add(p)?.checked_add(pp)?)?,
        MeasureLaw::Gauss => q.checked_add(qp)?.checked_mul(q.checked_add(p)?)?,
    };
    let xf = x as f64;
    Some(match law {
        MeasureLaw::Lebesgue => 1.0 / xf,
        MeasureLaw::Gauss => log2_1p(1.0 / xf),
    })
}

/// Canonical continued fraction of `num/den` in (0,1); the last digit is at least 2.
pub fn rational_cf(num: &BigUint, den: &BigUint) -> Result<Digits> {
    if num.is_zero() || num >= den {
        return Err(Error::domain(format!("{num}/{den} is not in (0,1)")));
    }
    let mut out = Vec::new();
    let (mut a, mut b) = (den.clone(), num.clone());
    while !b.is_zero() {
        let (d, r) = a.div_rem(&b);
        out.push(d.to_u64().ok_or_else(|| Error::domain("partial quotient exceeds u64"))?);
        a = b;
        b = r;
    }
    Ok(Digits(out))
}

/// Longest continued-fraction prefix shared by every point of the open interval.
///
/// Exact reference implementation on big rationals. [`certified_digits_fast`]
/// returns the same digits and is what the samplers use.
pub fn certified_digits(iv: &RationalInterval, max_count: usize) -> Digits {
    let mut lo = iv.lo.clone();
    let mut hi = iv.hi.clone();
    let mut out = Vec::new();
    while out.len() < max_count && !lo.is_zero() {
        let inv_hi = hi.recip();
        let inv_lo = lo.recip();
        let d = inv_hi.floor();
        let fl = inv_lo.floor();
        let ok = fl == d || (fl == &d + BigRational::one() && inv_lo.is_integer());
        if !ok {
            break;
        }
        let Some(digit) = d.to_integer().to_u64() else { break };
        out.push(digit);
        lo = inv_hi - &d;
        hi = inv_lo - &d;
    }
    Digits(out)
}

/// Same result as [`certified_digits`], via chunked machine-word Euclid steps.
pub fn certified_digits_fast(iv: &RationalInterval, max_count: usize) -> Digits {
    let limbs = |x: &BigInt| x.magnitude().to_u64_digits();
    let mut ends = crate::lehmer::Endpoints {
        lo_n: limbs(iv.lo.numer()),
        lo_d: limbs(iv.lo.denom()),
        hi_n: limbs(iv.hi.numer()),
        hi_d: limbs(iv.hi.denom()),
    };
    let mut out = Vec::new();
    crate::lehmer::extract(&mut ends, max_count, &mut out);
    Digits(out)
}

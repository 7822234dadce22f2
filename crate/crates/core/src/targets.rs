//! Shrinking target families `A_n` described by digit predicates.

use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::cf::{cylinder_interval, cylinder_measure, log2_1p, Digits, MeasureLaw, RationalInterval};
use crate::error::{Error, Result};
use crate::special::tuple_measure;

/// Parametric family of target sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum TargetFamily {
    /// `{a_1 >= floor(theta n) + 1}`.
    TailSet { theta: f64 },
    /// `{a_1, ..., a_m >= floor((theta n)^(1/m))}`.
    TupleSet { m: usize, theta: f64 },
    /// Cylinder `[j, j]` with `j = floor(n^(p/q))`.
    PatternSet { exponent: (u32, u32) },
    /// `[1, n] ∪ [n, 1]`.
    NegControl,
}

impl TargetFamily {
    pub fn pattern() -> Self {
        TargetFamily::PatternSet { exponent: (1, 4) }
    }

    /// Number of digits that decide membership.
    pub fn prefix_length(&self) -> usize {
        match self {
            TargetFamily::TailSet { .. } => 1,
            TargetFamily::TupleSet { m, .. } => *m,
            TargetFamily::PatternSet { .. } | TargetFamily::NegControl => 2,
        }
    }

    /// `lim n mu(A_n)` when the family has a finite positive limit.
    pub fn limit_intensity(&self) -> Option<f64> {
        let ln2 = std::f64::consts::LN_2;
        match self {
            TargetFamily::TailSet { theta } | TargetFamily::TupleSet { theta, .. } => Some(1.0 / (theta * ln2)),
            TargetFamily::PatternSet { exponent: (1, 4) } => Some(1.0 / ln2),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            TargetFamily::TailSet { theta } | TargetFamily::TupleSet { theta, .. }
                if !(theta.is_finite() && *theta > 0.0) =>
            {
                Err(Error::domain(format!("theta must be positive, got {theta}")))
            }
            TargetFamily::TupleSet { m: 0, .. } => Err(Error::domain("tuple length m must be at least 1")),
            TargetFamily::PatternSet { exponent: (p, q) } if *p == 0 || *q == 0 => {
                Err(Error::domain("pattern exponent must be a positive rational"))
            }
            _ => Ok(()),
        }
    }

    /// The set `A_n`.
    pub fn resolve(&self, n: u64) -> Result<Target> {
        self.validate()?;
        if n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        let kind = match *self {
            TargetFamily::TailSet { theta } => TargetKind::Tail { k: (theta * n as f64).floor() as u64 + 1 },
            TargetFamily::TupleSet { m, theta } => {
                let k = floor_root(theta * n as f64, m as u32);
                if k < 1 {
                    return Err(Error::domain(format!("tuple threshold is 0 at n = {n}")));
                }
                TargetKind::Tuple { m, k }
            }
            TargetFamily::PatternSet { exponent: (p, q) } => {
                let j = BigUint::from(n).pow(p).nth_root(q);
                let j = j.to_u64().ok_or_else(|| Error::domain("pattern digit exceeds u64"))?;
                TargetKind::Words(vec![Digits::new(vec![j, j])?])
            }
            TargetFamily::NegControl => {
                let mut words = vec![Digits::new(vec![1, n])?, Digits::new(vec![n, 1])?];
                words.dedup();
                TargetKind::Words(words)
            }
        };
        Ok(Target { family: self.clone(), n, kind })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TargetFamily::TailSet { .. } => "tail",
            TargetFamily::TupleSet { .. } => "tuple",
            TargetFamily::PatternSet { .. } => "pattern",
            TargetFamily::NegControl => "negcontrol",
        }
    }
}

impl fmt::Display for TargetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetFamily::TailSet { theta } => write!(f, "tail(theta={theta})"),
            TargetFamily::TupleSet { m, theta } => write!(f, "tuple(m={m}, theta={theta})"),
            TargetFamily::PatternSet { exponent: (p, q) } => write!(f, "pattern(exponent={p}/{q})"),
            TargetFamily::NegControl => write!(f, "negcontrol"),
        }
    }
}

/// Largest integer `k` with `k^m <= x`.
fn floor_root(x: f64, m: u32) -> u64 {
    if !(x >= 1.0) {
        return 0;
    }
    let mut k = x.powf(1.0 / m as f64).floor() as u64;
    let pow = |k: u64| (k as f64).powi(m as i32);
    while pow(k + 1) <= x {
        k += 1;
    }
    while k > 0 && pow(k) > x {
        k -= 1;
    }
    k
}

/// Resolved target `A_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Target {
    family: TargetFamily,
    n: u64,
    kind: TargetKind,
}

/// Membership rule of a resolved target.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetKind {
    /// `a_1 >= k`.
    Tail { k: u64 },
    /// `a_1, ..., a_m >= k`.
    Tuple { m: usize, k: u64 },
    /// Union of cylinders of equal length.
    Words(Vec<Digits>),
}

impl Target {
    pub fn family(&self) -> &TargetFamily {
        &self.family
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn kind(&self) -> &TargetKind {
        &self.kind
    }

    /// Digits needed to decide membership.
    pub fn window(&self) -> usize {
        match &self.kind {
            TargetKind::Tail { .. } => 1,
            TargetKind::Tuple { m, .. } => *m,
            TargetKind::Words(w) => w[0].len(),
        }
    }

    /// Membership of a point whose expansion starts with `block`.
    pub fn contains_block(&self, block: &[u64]) -> bool {
        match &self.kind {
            TargetKind::Tail { k } => block[0] >= *k,
            TargetKind::Tuple { m, k } => block[..*m].iter().all(|a| a >= k),
            TargetKind::Words(ws) => ws.iter().any(|w| block[..w.len()] == w[..]),
        }
    }

    /// Gauss measure of the target.
    pub fn measure(&self) -> f64 {
        self.measure_under(MeasureLaw::Gauss)
    }

    pub fn measure_under(&self, law: MeasureLaw) -> f64 {
        match (&self.kind, law) {
            (TargetKind::Tail { k }, MeasureLaw::Gauss) => log2_1p(1.0 / *k as f64),
            (TargetKind::Tail { k }, MeasureLaw::Lebesgue) => 1.0 / *k as f64,
            (TargetKind::Tuple { m, k }, law) => tuple_measure(*m, *k, law),
            (TargetKind::Words(ws), law) => ws.iter().map(|w| cylinder_measure(w, law)).sum(),
        }
    }

    /// Disjoint intervals whose union is the target, when it is a finite union.
    pub fn intervals(&self) -> Option<Vec<RationalInterval>> {
        match &self.kind {
            TargetKind::Tail { k } => {
                Some(vec![RationalInterval::new(BigRational::from_integer(0.into()), BigRational::new(1.into(), (*k).into())).ok()?])
            }
            TargetKind::Tuple { k: 1, .. } => Some(vec![RationalInterval::unit()]),
            TargetKind::Tuple { .. } => None,
            TargetKind::Words(ws) => ws.iter().map(|w| cylinder_interval(w).ok()).collect(),
        }
    }
}

/// `mu(A_n)` under the Gauss measure.
pub fn target_measure(fam: &TargetFamily, n: u64) -> Result<f64> {
    Ok(fam.resolve(n)?.measure())
}

/// Number of positions `0 <= i < n` whose digit block `a_{i+1}..a_{i+m}` lies in the target.
pub fn hits_in_orbit(digits: &[u64], target: &Target, n: u64) -> Result<u64> {
    let m = target.window();
    let needed = n as usize - 1 + m;
    if digits.len() < needed {
        return Err(Error::PrecisionShortfall { needed, got: digits.len() });
    }
    Ok((0..n as usize).filter(|&i| target.contains_block(&digits[i..i + m])).count() as u64)
}

/// First `i` in `from..=horizon` with `T^i x` in the target, scanning certified digits.
///
/// Returns `Ok(None)` when the horizon is covered without a hit and a
/// precision shortfall when `digits` ends before the horizon does.
pub fn first_hit_in_orbit(digits: &[u64], target: &Target, from: usize, horizon: usize) -> Result<Option<u64>> {
    let m = target.window();
    let last = digits.len().saturating_sub(m).min(horizon);
    for i in from..=last {
        if target.contains_block(&digits[i..i + m]) {
            return Ok(Some(i as u64));
        }
    }
    if last < horizon {
        return Err(Error::PrecisionShortfall { needed: horizon + m, got: digits.len() });
    }
    Ok(None)
}

/// Method used by [`overlap_measure`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OverlapMethod {
    Exact,
    Operator { grid_size: usize },
    MonteCarlo { trials: u64, seed: u64 },
}

/// Estimate of `mu(A_n ∩ T^{-i} A_n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OverlapEstimate {
    pub value: f64,
    /// Absolute error bound (exact methods) or standard error (Monte Carlo).
    pub error: f64,
}

const TAIL_SERIES_TERMS: u64 = 1000;

/// `mu(a_1 >= k, a_2 >= k)` summed branch by branch, with the remainder in closed form.
pub fn tail_overlap_series(k: u64) -> f64 {
    let kf = k as f64;
    let mut acc = 0.0;
    for b in k..k + TAIL_SERIES_TERMS {
        // mu((k/(bk+1), 1/b)) = log2((b+1)(bk+1) / (b (bk+k+1)))
        let bf = b as f64;
        acc += log2_1p(1.0 / (bf * (bf * kf + kf + 1.0)));
    }
    let a0 = (k + TAIL_SERIES_TERMS) as f64;
    acc + log2_1p(1.0 / (kf * a0))
}

fn word_overlaps(words: &[Digits], i: usize) -> Vec<Digits> {
    let m = words[0].len();
    let mut out = Vec::new();
    for u in words {
        for v in words {
            if u[i.min(m)..] == v[..m - i.min(m)] {
                let mut w = u[..i.min(m)].to_vec();
                w.extend_from_slice(v);
                out.push(Digits::new(w).expect("digits stay positive"));
            }
        }
    }
    out
}

/// Words whose cylinders partition `A ∩ T^{-i} A` for a union of equal-length words, `i <= m`.
pub fn word_union_overlap(words: &[Digits], i: usize) -> Result<Vec<Digits>> {
    if words.is_empty() || i == 0 || i > words[0].len() {
        return Err(Error::Unsupported(format!("word overlap at shift {i}")));
    }
    Ok(word_overlaps(words, i))
}

/// `mu(A_n ∩ T^{-i} A_n)` by the requested method.
pub fn overlap_measure(fam: &TargetFamily, n: u64, i: u64, method: OverlapMethod) -> Result<OverlapEstimate> {
    if i == 0 {
        return Err(Error::domain("overlap shift must be at least 1"));
    }
    let target = fam.resolve(n)?;
    match method {
        OverlapMethod::Exact => match target.kind() {
            TargetKind::Tail { k } if i == 1 => {
                let v = tail_overlap_series(*k);
                Ok(OverlapEstimate { value: v, error: v * 1e-12 })
            }
            TargetKind::Words(ws) if (i as usize) <= ws[0].len() => {
                let v: f64 = word_union_overlap(ws, i as usize)?.iter().map(|w| cylinder_measure(w, MeasureLaw::Gauss)).sum();
                Ok(OverlapEstimate { value: v, error: v * 1e-13 })
            }
            _ => Err(Error::Unsupported(format!("exact overlap for {fam} at shift {i}"))),
        },
        OverlapMethod::Operator { grid_size } => crate::transfer::experiments::operator_overlap_for(&target, i as usize, grid_size),
        OverlapMethod::MonteCarlo { trials, seed } => crate::hits::montecarlo_overlap(&target, i as usize, trials, seed),
    }
}

/// `mu(A_n ∩ T^{-i} A_n) / mu(A_n)`.
pub fn assumption_b_ratio(fam: &TargetFamily, n: u64, i: u64, method: OverlapMethod) -> Result<f64> {
    let ov = overlap_measure(fam, n, i, method)?;
    Ok(ov.value / target_measure(fam, n)?)
}

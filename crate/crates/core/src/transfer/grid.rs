//! Ulam grids with small exact rational boundaries.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::cf::log2_1p;
use crate::error::{Error, Result};

/// Nonnegative rational with 64-bit numerator and denominator.
#[derive(Clone, Copy, Debug)]
pub struct Frac {
    pub num: u64,
    pub den: u64,
}

impl Frac {
    pub const ZERO: Frac = Frac { num: 0, den: 1 };
    pub const ONE: Frac = Frac { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        let g = gcd(num, den);
        Frac { num: num / g, den: den / g }
    }

    pub fn from_big(x: &BigRational) -> Option<Self> {
        let n = x.numer().to_u64()?;
        let d = x.denom().to_u64()?;
        Some(Frac::new(n, d))
    }

    pub fn to_big(self) -> BigRational {
        BigRational::new(BigInt::from(self.num), BigInt::from(self.den))
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `floor(1/x)` for `x > 0`.
    pub fn recip_floor(self) -> u64 {
        self.den / self.num
    }

    /// `ceil(1/x)` for `x > 0`.
    pub fn recip_ceil(self) -> u64 {
        self.den.div_ceil(self.num)
    }

    /// `1/x - d`, for `d <= 1/x`.
    pub fn recip_minus(self, d: u64) -> Frac {
        Frac::new(self.den - d * self.num, self.num)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl PartialEq for Frac {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frac {}

impl PartialOrd for Frac {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frac {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl fmt::Display for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Gauss measure of `(lo, hi)`.
pub fn gauss_mass(lo: Frac, hi: Frac) -> f64 {
    // (hi - lo) / (1 + lo)
    let num = hi.num as u128 * lo.den as u128 - lo.num as u128 * hi.den as u128;
    let den = hi.den as f64 * (lo.den as u128 + lo.num as u128) as f64;
    log2_1p(num as f64 / den)
}

/// Partition `0 = b_0 < ... < b_N = 1` with Gauss cell masses.
#[derive(Clone, Debug)]
pub struct UlamGrid {
    boundaries: Vec<Frac>,
    masses: Vec<f64>,
}

const BASE_BITS: u32 = 32;
const GRADING_OFFSET: f64 = 0.25;

impl UlamGrid {
    pub fn from_boundaries(boundaries: Vec<Frac>) -> Result<Self> {
        if boundaries.len() < 2 || boundaries[0] != Frac::ZERO || *boundaries.last().unwrap() != Frac::ONE {
            return Err(Error::domain("grid must run from 0 to 1"));
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("grid boundaries must increase strictly"));
        }
        if boundaries.iter().any(|b| b.den > 1 << 40) {
            return Err(Error::domain("grid boundary denominators must stay below 2^40"));
        }
        let masses = boundaries.windows(2).map(|w| gauss_mass(w[0], w[1])).collect();
        Ok(UlamGrid { boundaries, masses })
    }

    /// `cells` cells with widths proportional to `x + 0.25`, with every
    /// designated point made a boundary (snapping the nearest base boundary
    /// onto it, or inserting it).
    pub fn graded(cells: usize, designated: &[Frac]) -> Result<Self> {
        if cells < 2 {
            return Err(Error::domain("grid needs at least 2 cells"));
        }
        let scale = (1u64 << BASE_BITS) as f64;
        let x0 = GRADING_OFFSET;
        let r = (1.0 + x0) / x0;
        let mut b: Vec<Frac> = (0..=cells)
            .map(|i| {
                let u = i as f64 / cells as f64;
                let g = x0 * (r.powf(u) - 1.0);
                Frac::new((g * scale).round() as u64, 1 << BASE_BITS)
            })
            .collect();
        b[0] = Frac::ZERO;
        b[cells] = Frac::ONE;
        b.dedup();
        let mut fixed = vec![false; b.len()];
        fixed[0] = true;
        *fixed.last_mut().unwrap() = true;
        let mut points: Vec<Frac> = designated.to_vec();
        points.sort();
        points.dedup();
        for p in points {
            if p <= Frac::ZERO || p >= Frac::ONE {
                continue;
            }
            let idx = b.partition_point(|x| *x < p);
            if b[idx] == p {
                fixed[idx] = true;
                continue;
            }
            // b[idx-1] < p < b[idx]
            let left = idx - 1;
            let closer_left = (p.to_f64() - b[left].to_f64()) <= (b[idx].to_f64() - p.to_f64());
            let order = if closer_left { [left, idx] } else { [idx, left] };
            if let Some(&j) = order.iter().find(|&&j| !fixed[j]) {
                b[j] = p;
                fixed[j] = true;
            } else {
                b.insert(idx, p);
                fixed.insert(idx, true);
            }
        }
        Self::from_boundaries(b)
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn boundaries(&self) -> &[Frac] {
        &self.boundaries
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// `(b_i, b_{i+1})`.
    pub fn cell(&self, i: usize) -> (Frac, Frac) {
        (self.boundaries[i], self.boundaries[i + 1])
    }

    /// Index of the cell containing the points just above `x`.
    pub fn cell_above(&self, x: Frac) -> usize {
        let idx = self.boundaries.partition_point(|b| *b <= x);
        idx.saturating_sub(1).min(self.len() - 1)
    }

    /// Cells making up `(lo, hi)`, if both endpoints are boundaries.
    pub fn cells_between(&self, lo: Frac, hi: Frac) -> Option<std::ops::Range<usize>> {
        let a = self.boundaries.binary_search(&lo).ok()?;
        let b = self.boundaries.binary_search(&hi).ok()?;
        (a < b).then_some(a..b)
    }

    /// Midpoints of the cells.
    pub fn midpoints(&self) -> Vec<f64> {
        self.boundaries.windows(2).map(|w| 0.5 * (w[0].to_f64() + w[1].to_f64())).collect()
    }
}

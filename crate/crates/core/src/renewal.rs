//! Renewal Markov chain: from state 1 jump to `i` with probability `f_i`,
//! from `k >= 2` step down to `k - 1`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::hurwitz_zeta;

const TAIL_TOL: f64 = 1e-12;
const MAX_STATES: usize = 1 << 22;

/// Branch probabilities `f_i`, `i >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchLaw {
    /// `f_i = lambda^i / (i! (e^lambda - 1))`; `lambda = 1` is the default chain.
    PoissonIntensity(f64),
    /// `f_i = (1 - p) p^(i-1)`.
    Geometric(f64),
    /// `f_i` proportional to `i^(-alpha)`.
    Power(f64),
    /// Finite list, normalized to sum 1.
    Explicit(Vec<f64>),
}

impl Default for BranchLaw {
    fn default() -> Self {
        BranchLaw::PoissonIntensity(1.0)
    }
}

impl BranchLaw {
    fn validate(&self) -> Result<()> {
        match self {
            BranchLaw::PoissonIntensity(l) if !(l.is_finite() && *l > 0.0) => {
                Err(Error::domain(format!("intensity must be positive, got {l}")))
            }
            BranchLaw::Geometric(p) if !(*p > 0.0 && *p < 1.0) => {
                Err(Error::domain(format!("geometric ratio must lie in (0,1), got {p}")))
            }
            BranchLaw::Power(a) if !(*a > 1.0) => Err(Error::domain(format!("power exponent must exceed 1, got {a}"))),
            BranchLaw::Power(a) if *a <= 2.0 => Err(Error::NoStationaryMeasure),
            BranchLaw::Explicit(v) if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x > 0.0)) => {
                Err(Error::domain("explicit branch probabilities must be positive"))
            }
            _ => Ok(()),
        }
    }

    /// `f_i` for `1 <= i`.
    fn f(&self, i: usize) -> f64 {
        let x = i as f64;
        match self {
            BranchLaw::PoissonIntensity(l) => {
                (x * l.ln() - ln_factorial(i) - l.exp_m1().ln()).exp()
            }
            BranchLaw::Geometric(p) => (1.0 - p) * p.powf(x - 1.0),
            BranchLaw::Power(a) => x.powf(-a) / hurwitz_zeta(*a, 1.0),
            BranchLaw::Explicit(v) => {
                let s: f64 = v.iter().sum();
                v.get(i - 1).map_or(0.0, |w| w / s)
            }
        }
    }

    /// `sum_{i > t} f_i`.
    fn tail(&self, t: usize) -> f64 {
        match self {
            BranchLaw::PoissonIntensity(_) => {
                let mut acc = 0.0;
                let mut i = t + 1;
                loop {
                    let term = self.f(i);
                    acc += term;
                    if term <= acc * 1e-18 || term == 0.0 {
                        return acc;
                    }
                    i += 1;
                }
            }
            BranchLaw::Geometric(p) => p.powf(t as f64),
            BranchLaw::Power(a) => hurwitz_zeta(*a, t as f64 + 1.0) / hurwitz_zeta(*a, 1.0),
            BranchLaw::Explicit(v) => {
                let s: f64 = v.iter().sum();
                v.iter().skip(t).sum::<f64>() / s
            }
        }
    }

    /// Upper bound on `sum_{i > t} i f_i`, which dominates both tails.
    fn moment_tail(&self, t: usize) -> f64 {
        let tf = t as f64;
        match self {
            BranchLaw::PoissonIntensity(l) => {
                let q = l / (tf + 1.0);
                if q >= 0.5 {
                    f64::INFINITY
                } else {
                    (tf + 1.0) * self.f(t + 1) / (1.0 - q)
                }
            }
            BranchLaw::Geometric(p) => p.powf(tf) * (tf + 1.0 / (1.0 - p)),
            BranchLaw::Power(a) => tf.powf(2.0 - a) / (a - 2.0) / hurwitz_zeta(*a, 1.0),
            BranchLaw::Explicit(v) => {
                if t >= v.len() {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

fn ln_factorial(i: usize) -> f64 {
    (2..=i).map(|k| (k as f64).ln()).sum()
}

/// Renewal chain with its stationary law on states `1..=truncation`.
#[derive(Clone, Debug)]
pub struct RenewalChain {
    law: BranchLaw,
    f: Vec<f64>,
    r: Vec<f64>,
    pi: Vec<f64>,
    f_cdf: Vec<f64>,
    pi_cdf: Vec<f64>,
    tail_bound: f64,
}

/// Builds the chain, extending `truncation` until the neglected mass is below 1e-12.
pub fn renewal_stationary(law: &BranchLaw, truncation: usize) -> Result<RenewalChain> {
    law.validate()?;
    if truncation < 2 {
        return Err(Error::domain("truncation must be at least 2"));
    }
    let mut t = truncation;
    if let BranchLaw::Explicit(v) = law {
        t = t.max(v.len());
    }
    while law.moment_tail(t) > TAIL_TOL {
        if t >= MAX_STATES {
            return Err(Error::domain(format!(
                "branch tail still {:e} at {t} states",
                law.moment_tail(t)
            )));
        }
        t *= 2;
    }
    let f: Vec<f64> = (1..=t).map(|i| law.f(i)).collect();
    // r[k] = sum_{i > k} f_i for k = 0..t, by backward sums
    let mut r = vec![0.0; t + 1];
    r[t] = law.tail(t);
    for k in (0..t).rev() {
        r[k] = r[k + 1] + f[k];
    }
    let total: f64 = r[..t].iter().sum();
    let pi: Vec<f64> = r[..t].iter().map(|x| x / total).collect();
    let cdf = |v: &[f64]| {
        let mut acc = 0.0;
        v.iter()
            .map(|x| {
                acc += x;
                acc
            })
            .collect::<Vec<f64>>()
    };
    Ok(RenewalChain {
        law: law.clone(),
        f_cdf: cdf(&f),
        pi_cdf: cdf(&pi),
        f,
        r,
        pi,
        tail_bound: law.moment_tail(t),
    })
}

impl RenewalChain {
    pub fn law(&self) -> &BranchLaw {
        &self.law
    }

    pub fn truncation(&self) -> usize {
        self.f.len()
    }

    /// Bound on the mass neglected beyond the truncation.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// `f_i` for `i = 1..=truncation` (index 0 holds `f_1`).
    pub fn branch_probs(&self) -> &[f64] {
        &self.f
    }

    /// `r_k` for `k = 0..=truncation`.
    pub fn tails(&self) -> &[f64] {
        &self.r
    }

    /// Stationary probabilities (index 0 holds state 1).
    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    /// `pi_s` for a state `s >= 1`.
    pub fn pi(&self, s: usize) -> f64 {
        self.pi.get(s.wrapping_sub(1)).copied().unwrap_or(0.0)
    }

    /// `||pi P - pi||_1` on the truncated transition matrix.
    pub fn stationarity_residual(&self) -> f64 {
        let t = self.pi.len();
        (0..t)
            .map(|k| {
                let next = self.pi.get(k + 1).copied().unwrap_or(0.0);
                (self.pi[0] * self.f[k] + next - self.pi[k]).abs()
            })
            .sum()
    }

    fn draw(cdf: &[f64], u: f64) -> usize {
        let idx = cdf.partition_point(|&c| c <= u);
        if idx >= cdf.len() {
            log::warn!("renewal draw beyond truncation {}, clamped", cdf.len());
            cdf.len()
        } else {
            idx + 1
        }
    }

    pub fn sample_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        Self::draw(&self.pi_cdf, rng.gen::<f64>())
    }

    /// Next state after `state`.
    pub fn step<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        if state == 1 {
            Self::draw(&self.f_cdf, rng.gen::<f64>())
        } else {
            state - 1
        }
    }
}

/// Stationary path of the given length.
pub fn renewal_sample_path<R: Rng + ?Sized>(chain: &RenewalChain, length: usize, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::with_capacity(length);
    if length == 0 {
        return out;
    }
    let mut s = chain.sample_stationary(rng);
    out.push(s);
    while out.len() < length {
        s = chain.step(s, rng);
        out.push(s);
    }
    out
}

/// `sum_{s >= k} pi_s`.
pub fn renewal_tail_mass(chain: &RenewalChain, k: usize) -> f64 {
    if k <= 1 {
        return 1.0;
    }
    chain.pi.iter().skip(k - 1).sum()
}

/// Intensity `lambda` of the Poisson branch law for which the stationary
/// mass of `{state >= threshold}` equals `target` (found by bisection).
pub fn calibrate_intensity(threshold: usize, target: f64) -> Result<f64> {
    if threshold < 2 || !(target > 0.0 && target < 1.0) {
        return Err(Error::domain("calibration needs threshold >= 2 and target in (0,1)"));
    }
    let mass = |l: f64| -> Result<f64> {
        let c = renewal_stationary(&BranchLaw::PoissonIntensity(l), 40)?;
        Ok(renewal_tail_mass(&c, threshold))
    };
    let (mut lo, mut hi) = (1e-9, 1.0);
    while mass(hi)? < target {
        hi *= 2.0;
        if hi > 50.0 {
            return Err(Error::domain("target tail mass not reachable"));
        }
    }
    if mass(lo)? > target {
        return Err(Error::domain("target tail mass too small to calibrate"));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

//! Poisson reference law and distribution distances.

use serde::Serialize;

use crate::scalar::Real;

/// `t^k e^{-t} / k!`, evaluated in log space.
pub fn poisson_pmf<S: Real>(t: S, k: u64) -> S {
    if t <= S::zero() {
        return if k == 0 { S::one() } else { S::zero() };
    }
    let kf = S::of(k as f64);
    let log_fact = S::of(ln_gamma_int(k + 1));
    (kf * t.ln() - t - log_fact).exp()
}

/// `ln((n-1)!)` for integer `n >= 1`.
fn ln_gamma_int(n: u64) -> f64 {
    if n <= 171 {
        (2..n).map(|k| (k as f64).ln()).sum()
    } else {
        // Stirling series for ln Gamma(n)
        let x = n as f64;
        (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3))
            + 1.0 / (1260.0 * x.powi(5))
    }
}

/// One row of a distribution comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerK<S> {
    pub k: u64,
    pub count: u64,
    pub empirical: S,
    pub reference: S,
    pub std_err: S,
}

/// Empirical distribution against a reference law.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistributionReport<S> {
    pub tv: S,
    pub per_k: Vec<PerK<S>>,
    pub trials: u64,
}

/// Total variation between an empirical histogram (`counts[k]` trials with value `k`)
/// and a reference pmf. Reference mass beyond the largest observed `k` is
/// folded into that last cell.
pub fn tv_distance<S: Real>(counts: &[u64], reference: impl Fn(u64) -> S) -> DistributionReport<S> {
    let trials: u64 = counts.iter().sum();
    let kmax = counts.len().saturating_sub(1) as u64;
    let nf = S::of(trials.max(1) as f64);
    let mut per_k = Vec::with_capacity(counts.len());
    let mut below = S::zero();
    for k in 0..=kmax {
        let r = if k < kmax {
            let r = reference(k);
            below = below + r;
            r
        } else {
            (S::one() - below).max(S::zero())
        };
        let c = counts.get(k as usize).copied().unwrap_or(0);
        let p = S::of(c as f64) / nf;
        per_k.push(PerK { k, count: c, empirical: p, reference: r, std_err: (p * (S::one() - p) / nf).sqrt() });
    }
    let half = S::of(0.5);
    let tv = half * per_k.iter().map(|row| (row.empirical - row.reference).abs()).sum::<S>();
    DistributionReport { tv: tv.min(S::one()), per_k, trials }
}

/// One-sample Kolmogorov-Smirnov distance to Exp(1).
pub fn ks_exponential(sample: &[f64]) -> f64 {
    if sample.is_empty() {
        return 1.0;
    }
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = -(-x.max(0.0)).exp_m1();
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

/// `E[e^{-sS}]` from a histogram of `S`.
pub fn empirical_laplace(counts: &[u64], s: f64) -> Estimate {
    let trials: u64 = counts.iter().sum();
    let n = trials as f64;
    let (mut m1, mut m2) = (0.0, 0.0);
    for (k, &c) in counts.iter().enumerate() {
        let e = (-s * k as f64).exp();
        m1 += c as f64 * e;
        m2 += c as f64 * e * e;
    }
    let mean = m1 / n;
    let var = if trials > 1 { ((m2 - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Estimate { value: if s == 0.0 { 1.0 } else { mean }, std_err: (var / n).sqrt() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stirling_branch_is_continuous() {
        let exact: f64 = (2..200u64).map(|k| (k as f64).ln()).sum();
        assert!((ln_gamma_int(200) - exact).abs() < 1e-9);
    }
}

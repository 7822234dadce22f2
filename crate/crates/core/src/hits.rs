//! Monte Carlo hit counts and first hitting times.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::cf::MeasureLaw;
use crate::error::{Error, Result};
use crate::orbit::{sample_point, DyadicPoint};
use crate::renewal::{renewal_tail_mass, RenewalChain};
use crate::rng::{trial_rng, PURPOSE_ACCEPT, PURPOSE_OVERLAP, PURPOSE_PATH, PURPOSE_POINT};
use crate::stats::{ks_exponential, Estimate};
use crate::targets::{OverlapEstimate, Target};

/// Dynamical system and initial law of a Monte Carlo run.
#[derive(Clone, Copy, Debug)]
pub enum System<'a> {
    /// Gauss map, target given by a digit predicate.
    Gauss { target: &'a Target, law: MeasureLaw },
    /// Renewal chain from its stationary law, target `{state >= threshold}`.
    Renewal { chain: &'a RenewalChain, threshold: usize },
}

impl System<'_> {
    /// Measure of the target under the invariant law.
    pub fn target_measure(&self) -> f64 {
        match self {
            System::Gauss { target, .. } => target.measure(),
            System::Renewal { chain, threshold } => renewal_tail_mass(chain, *threshold),
        }
    }

    pub fn law_name(&self) -> &'static str {
        match self {
            System::Gauss { law: MeasureLaw::Gauss, .. } => "gauss",
            System::Gauss { law: MeasureLaw::Lebesgue, .. } => "lebesgue",
            System::Renewal { .. } => "stationary",
        }
    }
}

/// Distribution of the visit count over Monte Carlo trials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HitHistogram {
    pub counts: BTreeMap<u64, u64>,
    pub trials: u64,
    pub n: u64,
    pub t_hat: f64,
    pub law: String,
    pub seed: u64,
}

impl HitHistogram {
    /// Dense counts indexed by `k`.
    pub fn dense(&self) -> Vec<u64> {
        let len = self.counts.keys().next_back().map_or(0, |k| *k as usize + 1);
        let mut v = vec![0; len];
        for (&k, &c) in &self.counts {
            v[k as usize] = c;
        }
        v
    }
}

fn gauss_digits(law: MeasureLaw, seed: u64, trial: u64, needed: usize) -> Result<Vec<u64>> {
    let mut xr = trial_rng(seed, PURPOSE_POINT, trial);
    let mut ur = trial_rng(seed, PURPOSE_ACCEPT, trial);
    let mut p = sample_point(&mut xr, &mut ur, law);
    p.certified_digits(needed, &mut xr)
}

fn gauss_point(law: MeasureLaw, seed: u64, trial: u64) -> (DyadicPoint, rand_chacha::ChaCha8Rng) {
    let mut xr = trial_rng(seed, PURPOSE_POINT, trial);
    let mut ur = trial_rng(seed, PURPOSE_ACCEPT, trial);
    let p = sample_point(&mut xr, &mut ur, law);
    (p, xr)
}

fn renewal_hits(chain: &RenewalChain, threshold: usize, n: u64, seed: u64, trial: u64) -> u64 {
    let mut rng = trial_rng(seed, PURPOSE_PATH, trial);
    let mut s = chain.sample_stationary(&mut rng);
    let mut hits = 0;
    for i in 0..n {
        if i > 0 {
            s = chain.step(s, &mut rng);
        }
        hits += (s >= threshold) as u64;
    }
    hits
}

fn trial_hits(system: &System, n: u64, seed: u64, trial: u64) -> Result<u64> {
    match *system {
        System::Gauss { target, law } => {
            let digits = gauss_digits(law, seed, trial, n as usize - 1 + target.window())?;
            crate::targets::hits_in_orbit(&digits, target, n)
        }
        System::Renewal { chain, threshold } => Ok(renewal_hits(chain, threshold, n, seed, trial)),
    }
}

fn collect_aborted<T>(results: &[Result<T>]) -> Result<()> {
    let aborted: Vec<u64> = results
        .iter()
        .enumerate()
        .filter_map(|(i, r)| match r {
            Err(Error::PrecisionShortfall { .. }) => Some(i as u64),
            _ => None,
        })
        .collect();
    if !aborted.is_empty() {
        return Err(Error::TrialsAborted { trials: aborted });
    }
    for r in results {
        if let Err(e) = r {
            return Err(e.clone());
        }
    }
    Ok(())
}

/// Histogram of `S_n = #{0 <= i < n : T^i x in A}` over independent trials.
///
/// Trial `j` draws its randomness from streams keyed by `(seed, j)`, so the
/// histogram does not depend on the thread count.
pub fn run_trials(system: &System, n: u64, trials: u64, seed: u64) -> Result<HitHistogram> {
    if trials == 0 || n == 0 {
        return Err(Error::domain("trials and n must be at least 1"));
    }
    if let System::Gauss { target, .. } = system {
        if target.n() != n {
            log::debug!("target resolved at n = {} used with n = {n}", target.n());
        }
    }
    let results: Vec<Result<u64>> = (0..trials).into_par_iter().map(|j| trial_hits(system, n, seed, j)).collect();
    collect_aborted(&results)?;
    let mut counts = BTreeMap::new();
    for r in results {
        *counts.entry(r.expect("checked above")).or_insert(0) += 1;
    }
    Ok(HitHistogram {
        counts,
        trials,
        n,
        t_hat: n as f64 * system.target_measure(),
        law: system.law_name().to_string(),
        seed,
    })
}

/// Scaled first hitting times and their distance to Exp(1).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HittingSample {
    /// `tau` per trial, `None` when the horizon was reached first.
    pub taus: Vec<Option<u64>>,
    pub mu: f64,
    pub horizon: u64,
    pub censored: u64,
    pub ks: f64,
    pub mean_scaled: Estimate,
}

impl HittingSample {
    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.taus.len() as f64
    }
}

fn gauss_first_hit(target: &Target, law: MeasureLaw, seed: u64, trial: u64, horizon: u64, mu: f64) -> Result<Option<u64>> {
    let (mut p, mut xr) = gauss_point(law, seed, trial);
    let m = target.window();
    let full = horizon as usize + m;
    let mut len = ((1.0 / mu) as usize).clamp(64, full);
    let mut from = 1usize;
    loop {
        let digits = p.certified_digits(len, &mut xr)?;
        match crate::targets::first_hit_in_orbit(&digits, target, from, horizon as usize) {
            Err(Error::PrecisionShortfall { .. }) => {
                from = len - m + 1;
                len = (2 * len).min(full);
            }
            r => return r,
        }
    }
}

fn renewal_first_hit(chain: &RenewalChain, threshold: usize, seed: u64, trial: u64, horizon: u64) -> Option<u64> {
    let mut rng = trial_rng(seed, PURPOSE_PATH, trial);
    let mut s = chain.sample_stationary(&mut rng);
    for i in 1..=horizon {
        s = chain.step(s, &mut rng);
        if s >= threshold {
            return Some(i);
        }
    }
    None
}

/// `tau = min{i >= 1 : T^i x in A}` per trial, capped at `ceil(20/mu)` steps.
pub fn first_hit_times(system: &System, trials: u64, seed: u64) -> Result<HittingSample> {
    if trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    let mu = system.target_measure();
    if !(mu > 0.0) {
        return Err(Error::domain("target has zero measure"));
    }
    let horizon = (20.0 / mu).ceil() as u64;
    let results: Vec<Result<Option<u64>>> = (0..trials)
        .into_par_iter()
        .map(|j| match *system {
            System::Gauss { target, law } => gauss_first_hit(target, law, seed, j, horizon, mu),
            System::Renewal { chain, threshold } => Ok(renewal_first_hit(chain, threshold, seed, j, horizon)),
        })
        .collect();
    collect_aborted(&results)?;
    let taus: Vec<Option<u64>> = results.into_iter().map(|r| r.expect("checked above")).collect();
    let scaled: Vec<f64> = taus.iter().flatten().map(|&t| t as f64 * mu).collect();
    let censored = taus.iter().filter(|t| t.is_none()).count() as u64;
    let n = scaled.len() as f64;
    let mean = scaled.iter().sum::<f64>() / n;
    let var = scaled.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(HittingSample {
        ks: ks_exponential(&scaled),
        taus,
        mu,
        horizon,
        censored,
        mean_scaled: Estimate { value: mean, std_err: (var / n).sqrt() },
    })
}

/// Monte Carlo estimate of `mu(A ∩ T^{-i} A)` with Gauss-distributed points.
pub fn montecarlo_overlap(target: &Target, i: usize, trials: u64, seed: u64) -> Result<OverlapEstimate> {
    if trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    let m = target.window();
    let results: Vec<Result<bool>> = (0..trials)
        .into_par_iter()
        .map(|j| {
            let mut xr = trial_rng(seed, PURPOSE_OVERLAP, j);
            let mut ur = trial_rng(seed, PURPOSE_ACCEPT ^ PURPOSE_OVERLAP << 8, j);
            let mut p = sample_point(&mut xr, &mut ur, MeasureLaw::Gauss);
            let d = p.certified_digits(i + m, &mut xr)?;
            Ok(target.contains_block(&d[..m]) && target.contains_block(&d[i..i + m]))
        })
        .collect();
    collect_aborted(&results)?;
    let hits = results.into_iter().filter(|r| matches!(r, Ok(true))).count() as f64;
    let n = trials as f64;
    let p = hits / n;
    Ok(OverlapEstimate { value: p, error: (p * (1.0 - p) / n).sqrt() })
}

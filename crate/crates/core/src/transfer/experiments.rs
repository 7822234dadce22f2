//! Perturbed-operator experiments on adapted grids.

use serde::Serialize;

use super::eigen::{leading_eigen, SpectralResult};
use super::grid::{Frac, UlamGrid};
use super::weights::{build_ulam, perturb, Perturbation, UlamWeights};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::targets::{OverlapEstimate, Target, TargetFamily};

pub const DEFAULT_TOL: f64 = 1e-13;
pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_BRANCH_TOL: f64 = 1e-14;

/// Grid, Ulam matrix and target cells for one target set.
#[derive(Clone, Debug)]
pub struct OperatorSetup {
    pub target: Target,
    pub grid: UlamGrid,
    pub weights: UlamWeights<f64>,
    pub cells: Vec<usize>,
    /// Exact `mu(A)`.
    pub mu: f64,
}

fn target_fracs(target: &Target) -> Result<Vec<(Frac, Frac)>> {
    let ivs = target
        .intervals()
        .ok_or_else(|| Error::Unsupported(format!("{} is not a finite union of intervals", target.family())))?;
    ivs.iter()
        .map(|iv| {
            let lo = Frac::from_big(iv.lo()).ok_or_else(|| Error::Unsupported("target endpoint too large".into()))?;
            let hi = Frac::from_big(iv.hi()).ok_or_else(|| Error::Unsupported("target endpoint too large".into()))?;
            Ok((lo, hi))
        })
        .collect()
}

/// Cells covering the union of intervals (all endpoints must be boundaries).
pub fn cells_of(grid: &UlamGrid, intervals: &[(Frac, Frac)]) -> Result<Vec<usize>> {
    let mut cells = Vec::new();
    for &(lo, hi) in intervals {
        let r = grid
            .cells_between(lo, hi)
            .ok_or_else(|| Error::domain(format!("({lo}, {hi}) is not a union of grid cells")))?;
        cells.extend(r);
    }
    cells.sort_unstable();
    cells.dedup();
    Ok(cells)
}

impl OperatorSetup {
    pub fn new(target: &Target, grid_size: usize) -> Result<Self> {
        let ivs = target_fracs(target)?;
        let designated: Vec<Frac> = ivs.iter().flat_map(|&(a, b)| [a, b]).collect();
        let grid = UlamGrid::graded(grid_size, &designated)?;
        let weights = build_ulam(&grid, DEFAULT_BRANCH_TOL)?;
        let cells = cells_of(&grid, &ivs)?;
        Ok(OperatorSetup { mu: target.measure(), target: target.clone(), grid, weights, cells })
    }

    pub fn grid_size(&self) -> usize {
        self.grid.len()
    }

    /// `mu(A)` summed over the target cells.
    pub fn cell_mass(&self) -> f64 {
        self.cells.iter().map(|&c| self.grid.masses()[c]).sum()
    }

    pub fn perturbed_eigen(&self, mode: Perturbation) -> Result<SpectralResult<f64>> {
        let w = perturb(&self.weights, &self.cells, mode)?;
        leading_eigen(&w, DEFAULT_TOL, DEFAULT_MAX_ITER)
    }

    /// `(1 - lambda_n) / ((1 - e^{-s}) mu(A))`.
    pub fn lemma_ratio(&self, s: f64) -> Result<LemmaRatio> {
        if !(s > 0.0) {
            return Err(Error::domain("s must be positive"));
        }
        let r = self.perturbed_eigen(Perturbation::Exponential(s))?;
        let ratio = (1.0 - r.lambda) / ((-s).exp_m1().abs() * self.mu);
        // mu-average of the eigenvector over A; equal to the ratio for the discrete operator
        let avg = self.cells.iter().map(|&c| self.grid.masses()[c] * r.eigvec[c]).sum::<f64>() / self.cell_mass();
        Ok(LemmaRatio {
            n: self.target.n(),
            s,
            lambda_n: r.lambda,
            mu_an: self.mu,
            ratio,
            eigvec_average: avg,
            residual: r.residual,
            grid: self.grid_size(),
        })
    }

    /// `(1 - lambda~_n) / mu(A)` for the survival operator.
    pub fn escape_ratio(&self) -> Result<EscapeRatio> {
        let r = self.perturbed_eigen(Perturbation::Survival)?;
        Ok(EscapeRatio {
            n: self.target.n(),
            lambda_tilde_n: r.lambda,
            mu_an: self.mu,
            ratio: (1.0 - r.lambda) / self.mu,
            residual: r.residual,
            grid: self.grid_size(),
        })
    }

    /// `lambda_n^n` against `exp(-t (1 - e^{-s}))`.
    pub fn laplace_predict(&self, s: f64) -> Result<LaplacePrediction> {
        let t = self.target.family().limit_intensity().ok_or_else(|| {
            Error::Unsupported(format!("{} has no finite limiting intensity", self.target.family()))
        })?;
        if !(s >= 0.0) {
            return Err(Error::domain("s must be nonnegative"));
        }
        let n = self.target.n();
        let limit = (-t * -(-s).exp_m1()).exp();
        let (lambda, residual) = if s == 0.0 {
            (1.0, 0.0)
        } else {
            let r = self.perturbed_eigen(Perturbation::Exponential(s))?;
            (r.lambda, r.residual)
        };
        let pow = lambda.powf(n as f64);
        Ok(LaplacePrediction {
            n,
            s,
            lambda_n: lambda,
            lambda_n_pow_n: pow,
            limit,
            rel_diff: (pow - limit).abs() / limit,
            residual,
            grid: self.grid_size(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaRatio {
    pub n: u64,
    pub s: f64,
    pub lambda_n: f64,
    pub mu_an: f64,
    pub ratio: f64,
    pub eigvec_average: f64,
    pub residual: f64,
    pub grid: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EscapeRatio {
    pub n: u64,
    pub lambda_tilde_n: f64,
    pub mu_an: f64,
    pub ratio: f64,
    pub residual: f64,
    pub grid: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LaplacePrediction {
    pub n: u64,
    pub s: f64,
    pub lambda_n: f64,
    pub lambda_n_pow_n: f64,
    pub limit: f64,
    pub rel_diff: f64,
    pub residual: f64,
    pub grid: usize,
}

pub fn lemma_ratio(fam: &TargetFamily, n: u64, s: f64, grid_size: usize) -> Result<LemmaRatio> {
    OperatorSetup::new(&fam.resolve(n)?, grid_size)?.lemma_ratio(s)
}

pub fn escape_ratio(fam: &TargetFamily, n: u64, grid_size: usize) -> Result<EscapeRatio> {
    OperatorSetup::new(&fam.resolve(n)?, grid_size)?.escape_ratio()
}

pub fn poisson_laplace_predict(fam: &TargetFamily, n: u64, s: f64, grid_size: usize) -> Result<LaplacePrediction> {
    OperatorSetup::new(&fam.resolve(n)?, grid_size)?.laplace_predict(s)
}

fn indicator<S: Real>(n: usize, cells: &[usize]) -> Vec<S> {
    let mut v = vec![S::zero(); n];
    for &c in cells {
        v[c] = S::one();
    }
    v
}

/// `sum_{j in A} mu_j (W^i 1_A)_j`, the discrete `mu(A ∩ T^{-i} A)`.
pub fn operator_overlap<S: Real>(w: &UlamWeights<S>, cells: &[usize], i: usize) -> S {
    let mut v = indicator::<S>(w.len(), cells);
    for _ in 0..i {
        v = w.mul(&v);
    }
    cells.iter().map(|&c| w.masses()[c] * v[c]).sum()
}

/// Overlap on a grid adapted to the target (exact up to rounding when `i = 1`).
pub fn operator_overlap_for(target: &Target, i: usize, grid_size: usize) -> Result<OverlapEstimate> {
    let setup = OperatorSetup::new(target, grid_size)?;
    let v = operator_overlap(&setup.weights, &setup.cells, i);
    Ok(OverlapEstimate { value: v, error: if i == 1 { 1e-12 * v } else { f64::NAN } })
}

/// Correlation decay between `A` and `B` across gaps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingEstimate {
    /// `(gap, psi)` for every requested gap.
    pub psi: Vec<(u64, f64)>,
    pub k_fit: f64,
    pub theta_fit: f64,
    /// Root-mean-square residual of the fit on the log scale.
    pub fit_rms: f64,
    pub fitted_points: usize,
}

/// `psi_g = |mu(A ∩ T^{-(g+k)} B) - mu(A) mu(B)| / (mu(A) mu(B))` for each gap `g`,
/// with a least-squares fit of `log psi = log K + g log theta`.
pub fn mixing_decay<S: Real>(w: &UlamWeights<S>, cells_a: &[usize], cells_b: &[usize], gaps: &[u64], k: u64) -> Result<MixingEstimate> {
    if cells_a.is_empty() || cells_b.is_empty() || gaps.is_empty() {
        return Err(Error::domain("mixing needs nonempty A, B and gaps"));
    }
    let mu = w.masses();
    let ma: f64 = cells_a.iter().map(|&c| mu[c].as_f64()).sum();
    let mb: f64 = cells_b.iter().map(|&c| mu[c].as_f64()).sum();
    let mut sorted = gaps.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut v = indicator::<S>(w.len(), cells_a);
    let mut power = 0u64;
    let mut psi = Vec::with_capacity(sorted.len());
    for &g in &sorted {
        while power < g + k {
            v = w.mul(&v);
            power += 1;
        }
        let joint: f64 = cells_b.iter().map(|&c| (mu[c] * v[c]).as_f64()).sum();
        psi.push((g, (joint - ma * mb).abs() / (ma * mb)));
    }
    let pts: Vec<(f64, f64)> = psi.iter().filter(|p| p.1 >= 1e-13).map(|&(g, p)| (g as f64, p.ln())).collect();
    if pts.len() < 2 {
        return Err(Error::domain("fewer than two correlations above 1e-13; cannot fit"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rms = (pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(MixingEstimate { psi, k_fit: icpt.exp(), theta_fit: slope.exp(), fit_rms: rms, fitted_points: pts.len() })
}

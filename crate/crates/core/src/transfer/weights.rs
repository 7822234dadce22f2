//! Ulam matrix of the Gauss transfer operator.

use std::ops::Range;

use rayon::prelude::*;

use super::grid::{Frac, UlamGrid};
use crate::cf::log2_1p;
use crate::error::{Error, Result};
use crate::scalar::Real;

const INVARIANT_TOL: f64 = 1e-10;
const MAX_EXPLICIT: u64 = 64;

/// Sparse matrix `W[j][i] = mu(I_i ∩ T^{-1} I_j) / mu(I_j)` stored by rows.
#[derive(Clone, Debug)]
pub struct UlamWeights<S> {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<S>,
    masses: Vec<S>,
    row_sum_error: f64,
    adjoint_error: f64,
    explicit_branches: u64,
}

/// `mu(v_d(u, w))` for the inverse branch `v_d(y) = 1/(d + y)`.
fn branch_piece(d: u64, u: Frac, w: Frac) -> f64 {
    let num = w.num as u128 * u.den as u128 - u.num as u128 * w.den as u128;
    let a = (d as u128 * u.den as u128 + u.num as u128) as f64;
    let b = ((d as u128 + 1) * w.den as u128 + w.num as u128) as f64;
    log2_1p(num as f64 / a / b)
}

/// `sum_{k=ka}^{kb} mu(v_k(u, w))`, with `kb = None` for an infinite tail.
fn branch_block(ka: u64, kb: Option<u64>, u: Frac, w: Frac) -> f64 {
    let num = (w.num as u128 * u.den as u128 - u.num as u128 * w.den as u128) as f64;
    let a = (ka as u128 * u.den as u128 + u.num as u128) as f64;
    match kb {
        None => log2_1p(num / a / w.den as f64),
        Some(kb) => {
            let count = (kb + 1 - ka) as f64;
            let b = ((kb as u128 + 1) * w.den as u128 + w.num as u128) as f64;
            log2_1p(num * count / a / b)
        }
    }
}

struct Column {
    entries: Vec<(u32, f64)>,
    explicit: u64,
}

fn overlapping(grid: &UlamGrid, lo: Frac, hi: Frac) -> Range<usize> {
    let a = grid.cell_above(lo);
    let b = grid.boundaries().partition_point(|x| *x < hi);
    a..b.max(a + 1)
}

fn add_partial(grid: &UlamGrid, d: u64, pl: Frac, ph: Frac, acc: &mut Vec<(u32, f64)>) {
    let (u0, w0) = (ph.recip_minus(d), pl.recip_minus(d));
    for j in overlapping(grid, u0, w0) {
        let (cl, ch) = grid.cell(j);
        let u = cl.max(u0);
        let w = ch.min(w0);
        if u < w {
            acc.push((j as u32, branch_piece(d, u, w)));
        }
    }
}

fn assemble_column(grid: &UlamGrid, i: usize, branch_tol: f64) -> Column {
    let (xl, xh) = grid.cell(i);
    let mut acc: Vec<(u32, f64)> = Vec::new();
    let mut explicit = 0;
    let d_min = xh.recip_floor();
    if xl.num == 0 {
        let mut k = if Frac::new(1, d_min) == xh {
            d_min
        } else {
            add_partial(grid, d_min, Frac::new(1, d_min + 1), xh, &mut acc);
            d_min + 1
        };
        let block = log2_1p(1.0 / k as f64);
        while explicit < MAX_EXPLICIT && log2_1p(1.0 / (k as f64 * (k + 2) as f64)) >= branch_tol * block {
            add_partial(grid, k, Frac::new(1, k + 1), Frac::new(1, k), &mut acc);
            explicit += 1;
            k += 1;
        }
        for j in 0..grid.len() {
            let (u, w) = grid.cell(j);
            acc.push((j as u32, branch_block(k, None, u, w)));
        }
    } else {
        let d_max = xl.recip_ceil() - 1;
        if d_min == d_max {
            add_partial(grid, d_min, xl, xh, &mut acc);
        } else {
            add_partial(grid, d_min, Frac::new(1, d_min + 1), xh, &mut acc);
            add_partial(grid, d_max, xl, Frac::new(1, d_max), &mut acc);
            if d_max > d_min + 1 {
                for j in 0..grid.len() {
                    let (u, w) = grid.cell(j);
                    acc.push((j as u32, branch_block(d_min + 1, Some(d_max - 1), u, w)));
                }
            }
        }
    }
    acc.sort_by_key(|e| e.0);
    let mut entries: Vec<(u32, f64)> = Vec::with_capacity(acc.len());
    for (j, m) in acc {
        match entries.last_mut() {
            Some(last) if last.0 == j => last.1 += m,
            _ => entries.push((j, m)),
        }
    }
    Column { entries, explicit }
}

/// Assembles the Ulam matrix of the Gauss map on `grid`.
///
/// Full branches are summed in closed form; near 0, branches are enumerated
/// one by one until the next branch adds less than `branch_tol` relative mass,
/// and the remaining infinite tail is added exactly.
pub fn build_ulam<S: Real>(grid: &UlamGrid, branch_tol: f64) -> Result<UlamWeights<S>> {
    if !(branch_tol > 0.0 && branch_tol < 1.0) {
        return Err(Error::domain(format!("branch tolerance must lie in (0,1), got {branch_tol}")));
    }
    let n = grid.len();
    let columns: Vec<Column> = (0..n).into_par_iter().map(|i| assemble_column(grid, i, branch_tol)).collect();
    let explicit_branches = columns.iter().map(|c| c.explicit).sum();
    let mu = grid.masses();

    // column masses -> row-major transpose by counting sort
    let mut counts = vec![0usize; n + 1];
    for c in &columns {
        for &(j, _) in &c.entries {
            counts[j as usize + 1] += 1;
        }
    }
    for j in 0..n {
        counts[j + 1] += counts[j];
    }
    let row_ptr = counts.clone();
    let nnz = row_ptr[n];
    let mut cols = vec![0u32; nnz];
    let mut raw = vec![0f64; nnz];
    let mut fill = counts;
    let mut adjoint_error: f64 = 0.0;
    for (i, c) in columns.iter().enumerate() {
        let total: f64 = c.entries.iter().map(|e| e.1).sum();
        adjoint_error = adjoint_error.max(((total - mu[i]) / mu[i]).abs());
        for &(j, m) in &c.entries {
            let slot = fill[j as usize];
            cols[slot] = i as u32;
            raw[slot] = m;
            fill[j as usize] += 1;
        }
    }
    let mut row_sum_error: f64 = 0.0;
    let mut vals = Vec::with_capacity(nnz);
    for j in 0..n {
        let row = &raw[row_ptr[j]..row_ptr[j + 1]];
        let s: f64 = row.iter().map(|m| m / mu[j]).sum();
        row_sum_error = row_sum_error.max((s - 1.0).abs());
        vals.extend(row.iter().map(|m| S::of(m / mu[j])));
    }
    if row_sum_error > INVARIANT_TOL || adjoint_error > INVARIANT_TOL {
        return Err(Error::BranchTolerance(row_sum_error.max(adjoint_error)));
    }
    Ok(UlamWeights {
        row_ptr,
        cols,
        vals,
        masses: mu.iter().map(|&m| S::of(m)).collect(),
        row_sum_error,
        adjoint_error,
        explicit_branches,
    })
}

/// How [`perturb`] treats the target cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Perturbation {
    /// Source weight `e^{-s}` on the target.
    Exponential(f64),
    /// Source weight 0 on the target.
    Survival,
}

/// Scales every column `i` in `cells` by the perturbation weight.
pub fn perturb<S: Real>(w: &UlamWeights<S>, cells: &[usize], mode: Perturbation) -> Result<UlamWeights<S>> {
    let factor = match mode {
        Perturbation::Exponential(s) if !(s >= 0.0) => {
            return Err(Error::domain(format!("perturbation parameter must be nonnegative, got {s}")))
        }
        Perturbation::Exponential(s) => S::of((-s).exp()),
        Perturbation::Survival => S::zero(),
    };
    let mut mask = vec![false; w.len()];
    for &c in cells {
        *mask.get_mut(c).ok_or_else(|| Error::domain(format!("cell {c} out of range")))? = true;
    }
    let mut out = w.clone();
    for (v, &c) in out.vals.iter_mut().zip(&out.cols) {
        if mask[c as usize] {
            *v = *v * factor;
        }
    }
    Ok(out)
}

impl<S: Real> UlamWeights<S> {
    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Cell masses `mu(I_i)`.
    pub fn masses(&self) -> &[S] {
        &self.masses
    }

    /// Largest `|sum_i W[j][i] - 1|` seen at assembly.
    pub fn row_sum_error(&self) -> f64 {
        self.row_sum_error
    }

    /// Largest relative `|sum_j W[j][i] mu_j - mu_i|` seen at assembly.
    pub fn adjoint_error(&self) -> f64 {
        self.adjoint_error
    }

    /// Number of branches enumerated individually next to 0.
    pub fn explicit_branches(&self) -> u64 {
        self.explicit_branches
    }

    /// Entries `(i, W[j][i])` of row `j`.
    pub fn row(&self, j: usize) -> impl Iterator<Item = (usize, S)> + '_ {
        let r = self.row_ptr[j]..self.row_ptr[j + 1];
        self.cols[r.clone()].iter().map(|&c| c as usize).zip(self.vals[r].iter().copied())
    }

    /// `y = W x`, parallel over rows.
    pub fn apply(&self, x: &[S], y: &mut [S]) {
        y.par_iter_mut().enumerate().with_min_len(256).for_each(|(j, yj)| {
            let r = self.row_ptr[j]..self.row_ptr[j + 1];
            let mut acc = S::zero();
            for (&c, &v) in self.cols[r.clone()].iter().zip(&self.vals[r]) {
                acc = acc + v * x[c as usize];
            }
            *yj = acc;
        });
    }

    /// `W x` as a new vector.
    pub fn mul(&self, x: &[S]) -> Vec<S> {
        let mut y = vec![S::zero(); self.len()];
        self.apply(x, &mut y);
        y
    }

    /// Row sums `sum_i W[j][i]`.
    pub fn row_sums(&self) -> Vec<S> {
        (0..self.len()).map(|j| self.row(j).map(|(_, v)| v).sum()).collect()
    }

    /// `sum_j W[j][i] mu_j` for every column `i`.
    pub fn column_masses(&self) -> Vec<S> {
        let mut out = vec![S::zero(); self.len()];
        for j in 0..self.len() {
            for (i, v) in self.row(j) {
                out[i] = out[i] + v * self.masses[j];
            }
        }
        out
    }
}

//! Leading eigenpair by power iteration, second eigenvalue by deflation.

use serde::Serialize;

use super::weights::UlamWeights;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Perron eigenpair and spectral-gap estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralResult<S> {
    pub lambda: S,
    /// Normalized so that `sum_i eigvec_i mu_i = 1`.
    pub eigvec: Vec<S>,
    /// Second eigenvalue estimate (modulus from norm growth, sign from a Rayleigh quotient).
    pub lambda2: S,
    /// `|lambda2| / lambda`.
    pub gap: S,
    /// `max |W v - lambda v|`.
    pub residual: S,
    pub iterations: usize,
}

fn mu_dot<S: Real>(mu: &[S], x: &[S]) -> S {
    mu.iter().zip(x).map(|(&m, &v)| m * v).sum()
}

fn mu_norm<S: Real>(mu: &[S], x: &[S]) -> S {
    mu.iter().zip(x).map(|(&m, &v)| m * v * v).sum::<S>().sqrt()
}

fn max_abs_diff<S: Real>(a: &[S], b: &[S], scale: S) -> S {
    a.iter().zip(b).map(|(&x, &y)| (x - scale * y).abs()).fold(S::zero(), S::max)
}

/// Power iteration from the constant vector.
///
/// Converged once successive eigenvalue estimates differ by less than `tol`
/// and the residual is below `tol`.
pub fn leading_eigen<S: Real>(w: &UlamWeights<S>, tol: S, max_iter: usize) -> Result<SpectralResult<S>> {
    if !(tol > S::zero()) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let mu = w.masses();
    let n = w.len();
    let mut f = vec![S::one(); n];
    let norm = mu_dot(mu, &f);
    f.iter_mut().for_each(|x| *x = *x / norm);
    let mut g = vec![S::zero(); n];
    let mut prev = S::nan();
    let mut last = (S::nan(), S::nan());
    for it in 1..=max_iter {
        w.apply(&f, &mut g);
        let lambda = mu_dot(mu, &g);
        if !(lambda > S::zero()) || !lambda.is_finite() {
            return Err(Error::NotConverged {
                iterations: it,
                lambda: lambda.as_f64(),
                residual: f64::NAN,
                last_iterate: f.iter().map(|x| x.as_f64()).collect(),
            });
        }
        let residual = max_abs_diff(&g, &f, lambda);
        last = (lambda, residual);
        if (lambda - prev).abs() < tol && residual < tol {
            let (lambda2, _) = second_eigen(w, lambda, &f, max_iter);
            return Ok(SpectralResult {
                lambda,
                gap: lambda2.abs() / lambda,
                lambda2,
                eigvec: f,
                residual,
                iterations: it,
            });
        }
        prev = lambda;
        for (fi, gi) in f.iter_mut().zip(&g) {
            *fi = *gi / lambda;
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        lambda: last.0.as_f64(),
        residual: last.1.as_f64(),
        last_iterate: f.iter().map(|x| x.as_f64()).collect(),
    })
}

/// Power iteration on `W - lambda v mu^T`, which removes the Perron direction.
fn second_eigen<S: Real>(w: &UlamWeights<S>, lambda: S, v: &[S], max_iter: usize) -> (S, usize) {
    let mu = w.masses();
    let n = w.len();
    // deterministic start with no special symmetry
    let mut x: Vec<S> = (0..n)
        .map(|i| {
            let t = S::of((i as f64 + 0.5) / n as f64);
            t - S::of(0.5) + S::of(0.3) * (S::of(7.0) * t).sin()
        })
        .collect();
    let c = mu_dot(mu, &x);
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi = *xi - c * *vi;
    }
    let mut y = vec![S::zero(); n];
    let mut z = vec![S::zero(); n];
    let deflate = |out: &mut [S], inp: &[S]| {
        w.apply(inp, out);
        let c = mu_dot(mu, inp);
        for (o, vi) in out.iter_mut().zip(v) {
            *o = *o - lambda * c * *vi;
        }
    };
    let mut estimate = S::zero();
    let iters = max_iter.clamp(10, 2000);
    for it in 1..=iters {
        let nx = mu_norm(mu, &x);
        if nx == S::zero() {
            return (S::zero(), it);
        }
        x.iter_mut().for_each(|e| *e = *e / nx);
        deflate(&mut y, &x);
        deflate(&mut z, &y);
        // two steps at once so a sign-alternating or complex pair still gives a stable modulus
        let modulus = mu_norm(mu, &z).sqrt();
        let rayleigh = mu.iter().zip(&x).zip(&y).map(|((&m, &a), &b)| m * a * b).sum::<S>();
        let next = if rayleigh < S::zero() { -modulus } else { modulus };
        let done = (next - estimate).abs() <= S::of(1e-12).max(S::epsilon() * S::of(8.0));
        estimate = next;
        std::mem::swap(&mut x, &mut z);
        if done {
            return (estimate, it);
        }
    }
    (estimate, iters)
}

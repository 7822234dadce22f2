//! Poisson statistics of visits to shrinking targets under the Gauss map.
//!
//! The crate provides
//!
//! - exact continued-fraction arithmetic with certified digit extraction
//!   from dyadic enclosures ([`cf`], [`orbit`]),
//! - the renewal Markov chain as a second test system ([`renewal`]),
//! - target families and their exact measures ([`targets`]),
//! - Monte Carlo hit counts and hitting times ([`hits`], [`stats`]),
//! - an Ulam discretization of the Gauss transfer operator with perturbed
//!   eigenvalue experiments ([`transfer`]),
//! - exhaustive distortion and short-return checks ([`diagnostics`]).
//!
//! ```
//! use cfpoisson::{cylinder_interval, interval_measure, Digits, MeasureLaw};
//!
//! let iv = cylinder_interval(&Digits::new(vec![2]).unwrap()).unwrap();
//! let m: f64 = interval_measure(&iv, MeasureLaw::Lebesgue);
//! assert!((m - 1.0 / 6.0).abs() < 1e-15);
//! ```

pub mod cf;
pub mod diagnostics;
pub mod error;
pub mod hits;
mod lehmer;
pub mod orbit;
pub mod renewal;
pub mod rng;
pub mod scalar;
pub mod special;
pub mod stats;
pub mod targets;
pub mod transfer;

pub use cf::{
    certified_digits, certified_digits_fast, convergents, cylinder_interval, cylinder_measure, interval_measure,
    rational_cf, Convergents, Digits, MeasureLaw, RationalInterval,
};
pub use error::{Error, Result};
pub use orbit::{sample_dyadic, DyadicPoint};
pub use renewal::{renewal_sample_path, renewal_stationary, renewal_tail_mass, BranchLaw, RenewalChain};
pub use scalar::Real;
pub use targets::{
    assumption_b_ratio, first_hit_in_orbit, hits_in_orbit, overlap_measure, target_measure, OverlapEstimate, OverlapMethod, Target,
    TargetFamily,
};
pub use hits::{first_hit_times, run_trials, HitHistogram, HittingSample, System};
pub use stats::{empirical_laplace, poisson_pmf, Estimate};

/// Library version string embedded in outputs.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Ulam matrix in double precision.
pub type UlamWeights = transfer::UlamWeights<f64>;
/// Spectral data in double precision.
pub type SpectralResult = transfer::SpectralResult<f64>;
/// Distribution comparison in double precision.
pub type DistributionReport = stats::DistributionReport<f64>;

/// Total variation of a histogram against a reference pmf (double precision).
pub fn tv_distance(hist: &HitHistogram, reference: impl Fn(u64) -> f64) -> DistributionReport {
    stats::tv_distance(&hist.dense(), reference)
}

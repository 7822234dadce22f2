//! Ulam discretization of the Gauss transfer operator.

pub mod eigen;
pub mod experiments;
pub mod grid;
pub mod weights;

pub use eigen::{leading_eigen, SpectralResult};
pub use experiments::{
    escape_ratio, lemma_ratio, mixing_decay, operator_overlap, poisson_laplace_predict, EscapeRatio, LaplacePrediction,
    DEFAULT_BRANCH_TOL, DEFAULT_MAX_ITER, DEFAULT_TOL,
    LemmaRatio, MixingEstimate, OperatorSetup,
};
pub use grid::{Frac, UlamGrid};
pub use weights::{build_ulam, perturb, Perturbation, UlamWeights};

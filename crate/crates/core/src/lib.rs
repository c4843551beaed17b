//! Numerical toolkit for asymptotic quantum estimation.
//!
//! The crate is organized around the pipeline that takes a finite-dimensional
//! parametric family of density matrices to its asymptotically optimal
//! estimation risk:
//!
//! * [`linalg`] — dense complex-matrix kernels (Hermitian eigendecomposition,
//!   matrix functions, operator geometric mean, trace norm, tensor products).
//! * [`model`] — parametric quantum statistical models, their SLDs, the SLD
//!   Fisher information, and the square-root likelihood ratio.
//! * [`dext`] — the commutation operator, invariance tests for spans of
//!   observables, and construction of invariant extensions of the SLD span
//!   together with their Gaussian data `(Σ, A, τ, F)`.
//! * [`gauss`] — quantum Gaussian shift families: characteristic and
//!   quasi-characteristic functions, purity, and the classical/quantum
//!   splitting of a covariance matrix.
//! * [`bound`] — the representation bound `c_G` (the Holevo bound of the
//!   limiting Gaussian family) and the optimal limiting covariance.
//! * [`asym`] — finite-`n` convergence diagnostics computed by per-site
//!   factorization so block counts may reach `10^6` without forming tensor
//!   products.
//! * [`estim`] — estimator risk experiments: truncated-estimator risk curves,
//!   James–Stein shrinkage Monte Carlo, constant-risk regular estimators, and
//!   minimax grid scans.
//!
//! All public operations are pure functions of their inputs and are safe to
//! call concurrently.

pub mod asym;
pub mod bound;
pub mod dext;
pub mod estim;
pub mod gauss;
pub mod linalg;
pub mod model;
pub mod quad;
pub mod testutil;
pub mod tol;

use thiserror::Error;

/// Errors produced by the toolkit.
///
/// Variants are split between input validation failures and numerical
/// failures (non-convergence, residuals above tolerance). The distinction is
/// surfaced through [`Error::is_numerical`] so callers can map the two classes
/// to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix is not Hermitian: max asymmetry {max_asymmetry:.3e} exceeds {tol:.3e}")]
    NotHermitian { max_asymmetry: f64, tol: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("trace is {trace:.17} but must be 1 within {tol:.1e}")]
    NotUnitTrace { trace: f64, tol: f64 },

    #[error("eigenvalue {value:.3e} lies below the kernel cutoff and no kernel policy was supplied for {function}")]
    KernelEigenvalue { value: f64, function: &'static str },

    #[error("parameter {theta:?} is outside the model domain")]
    OutsideDomain { theta: Vec<f64> },

    #[error("parameter {theta:?} is too close to the domain boundary for the finite-difference stencil (step {step:.1e})")]
    NearBoundary { theta: Vec<f64>, step: f64 },

    #[error("Gram matrix is degenerate: min eigenvalue {min_eigenvalue:.3e}")]
    GramDegenerate { min_eigenvalue: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("decomposition residual {residual:.3e} exceeds tolerance {tol:.1e}: {context}")]
    ResidualTooLarge {
        residual: f64,
        tol: f64,
        context: &'static str,
    },

    #[error("solver failed to converge: {context} (iterations {iterations}, gap {gap:.3e})")]
    NoConvergence {
        context: &'static str,
        iterations: usize,
        gap: f64,
    },

    #[error("imaginary part of the covariance is singular (min singular value {min_singular:.3e}); split the covariance into classical and quantum blocks first")]
    SingularImaginaryPart { min_singular: f64 },

    #[error("model definition error: {0}")]
    ModelSpec(String),
}

impl Error {
    /// True for failures of numerical convergence or residual checks,
    /// false for input validation errors.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ResidualTooLarge { .. } | Error::NoConvergence { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Centralized numerical tolerances.
//!
//! Every threshold used for validation or convergence is defined here so
//! tests and callers agree on one set of constants.

/// Absolute entrywise tolerance for Hermitian symmetry.
pub const HERMITIAN_ABS: f64 = 1e-12;

/// Absolute tolerance on eigenvalues when checking positive semidefiniteness.
pub const PSD_EIG: f64 = 1e-10;

/// Absolute tolerance on `|trace - 1|` for density matrices.
pub const UNIT_TRACE: f64 = 1e-10;

/// Spectrum floor for sqrt/log/inv-sqrt: eigenvalues in `[-NEG_SPECTRUM, 0)`
/// are clamped to zero, anything lower is rejected.
pub const NEG_SPECTRUM: f64 = 1e-12;

/// Relative kernel cutoff: eigenvalues below `KERNEL_REL * lambda_max` count
/// as kernel for log, inv-sqrt, support projectors, and quotient arithmetic.
pub const KERNEL_REL: f64 = 1e-10;

/// Stabilization tolerance for the epsilon-regularized geometric mean of a
/// singular left argument: iterate until successive results differ by less
/// than this in max-entry norm.
pub const GEOMEAN_STABILIZE: f64 = 1e-8;

/// Max-entry residual allowed when verifying the Lyapunov equation solved by
/// an SLD, restricted to index pairs outside the kernel.
pub const SLD_RESIDUAL: f64 = 1e-8;

/// Default tolerance for invariance checks of spans of observables and for
/// invariant-extension construction.
pub const DEXT: f64 = 1e-8;

/// Minimum eigenvalue demanded of Gram matrices and of `Re Σ`.
pub const GRAM_MIN_EIG: f64 = 1e-10;

/// Max-entry residual allowed for the square-root likelihood-ratio
/// reconstruction `σ = RρR + σ⊥` after clamping.
pub const SQRT_LR_RESIDUAL: f64 = 1e-8;

/// Bound on `Tr ρ σ⊥` for a valid quantum Lebesgue decomposition.
pub const SQRT_LR_SINGULAR_OVERLAP: f64 = 1e-10;

/// Zero-mean tolerance `|Tr ρ X|` for extension observables.
pub const ZERO_MEAN: f64 = 1e-10;

/// Barrier termination: stop once `mu * (barrier dimension)` drops below this.
pub const BARRIER_GAP: f64 = 1e-9;

/// Certification tolerance for bound results: constraint residual,
/// `V* - Z*` eigenvalue floor, and `Tr G V*` consistency.
pub const BOUND_CERT: f64 = 1e-8;

/// Relative tolerance in the purity criterion `|det V - det S| <= tol |det V|`.
pub const PURITY_REL: f64 = 1e-8;

/// Max-entry residual for the classical/quantum block splitting round trip.
pub const SPLIT_RESIDUAL: f64 = 1e-8;

/// Singular values below this count as zero when pairing skew blocks or
/// testing invertibility of `Im Σ`.
pub const SKEW_SINGULAR: f64 = 1e-10;

/// Finite-difference step for model derivatives.
pub const FD_STEP: f64 = 1e-5;

//! Parametric quantum statistical models and their local geometry: states,
//! derivatives, symmetric logarithmic derivatives (SLDs), the SLD Fisher
//! information, and the square-root likelihood ratio of the quantum Lebesgue
//! decomposition.

pub mod builtin;
pub mod registry;

pub use builtin::{AffineModel, BlochBall, ProductNonIid, Pure1d, ScaledBloch, SpinCoherent};
pub use registry::{LoadedModel, ModelRegistry};

use crate::linalg::{
    self, c64, matrix_function_of_eig, max_abs_diff, CMatrix, HermEig, HermitianMatrix,
    KernelPolicy, MatrixFunction, RMatrix,
};
use crate::{tol, Error, Result};

/// A Hermitian, positive-semidefinite, unit-trace matrix: the state ρ.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    h: HermitianMatrix,
}

impl DensityMatrix {
    /// Validate Hermiticity (1e-12), positivity (eigenvalues ≥ -1e-10) and
    /// unit trace (1e-10).
    pub fn new(mat: CMatrix) -> Result<Self> {
        let h = HermitianMatrix::with_tol(mat, 10.0 * tol::HERMITIAN_ABS)?;
        let eig = h.eig();
        if eig.lambda_min() < -tol::PSD_EIG {
            return Err(Error::NotPsd {
                min_eigenvalue: eig.lambda_min(),
            });
        }
        let tr = h.trace_re();
        if (tr - 1.0).abs() > tol::UNIT_TRACE {
            return Err(Error::NotUnitTrace {
                trace: tr,
                tol: tol::UNIT_TRACE,
            });
        }
        Ok(Self { h })
    }

    /// Kronecker power `ρ^{⊗n}` of a validated state, skipping revalidation
    /// (a tensor product of states is a state).
    pub fn kron_power(&self, n: usize) -> Self {
        Self {
            h: HermitianMatrix::symmetrize(linalg::kron_power(self.matrix(), n))
                .expect("square by construction"),
        }
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.h.matrix()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.h
    }

    pub fn eig(&self) -> HermEig {
        self.h.eig()
    }

    /// `Tr ρ A` (complex in general).
    pub fn expect(&self, a: &CMatrix) -> linalg::C64 {
        linalg::trace(&(self.matrix() * a))
    }

    /// `Re Tr ρ A` for Hermitian `A`.
    pub fn expect_herm(&self, a: &HermitianMatrix) -> f64 {
        self.expect(a.matrix()).re
    }
}

/// A parametric quantum statistical model `θ ↦ ρ_θ` on an open domain.
///
/// Implementations provide the state map and, optionally, analytic parameter
/// derivatives; everything else (finite differences, SLDs, Fisher matrices)
/// is derived generically.
pub trait Model: Send + Sync {
    /// Registry tag of the model.
    fn name(&self) -> &str;
    fn hilbert_dim(&self) -> usize;
    fn param_dim(&self) -> usize;
    /// Open-domain membership test.
    fn contains(&self, theta: &[f64]) -> bool;
    /// The density matrix at `theta` (callers use [`state_at`] which also
    /// validates the domain and the state invariants).
    fn state_unchecked(&self, theta: &[f64]) -> CMatrix;
    /// Analytic derivative `∂_i ρ_θ` when available.
    fn analytic_derivative(&self, _theta: &[f64], _i: usize) -> Option<HermitianMatrix> {
        None
    }
}

fn check_theta(m: &dyn Model, theta: &[f64]) -> Result<()> {
    if theta.len() != m.param_dim() {
        return Err(Error::DimensionMismatch {
            context: "parameter vector length",
            expected: m.param_dim(),
            got: theta.len(),
        });
    }
    if !m.contains(theta) {
        return Err(Error::OutsideDomain {
            theta: theta.to_vec(),
        });
    }
    Ok(())
}

/// Evaluate the model at `theta`, validating the domain and state invariants.
pub fn state_at(m: &dyn Model, theta: &[f64]) -> Result<DensityMatrix> {
    check_theta(m, theta)?;
    DensityMatrix::new(m.state_unchecked(theta))
}

/// `∂_i ρ_θ`, analytic when the model provides it, otherwise a central finite
/// difference with one Richardson pass, symmetrized to Hermitian.
pub fn derivative(m: &dyn Model, theta: &[f64], i: usize) -> Result<HermitianMatrix> {
    check_theta(m, theta)?;
    if i >= m.param_dim() {
        return Err(Error::DimensionMismatch {
            context: "parameter index",
            expected: m.param_dim(),
            got: i,
        });
    }
    if let Some(d) = m.analytic_derivative(theta, i) {
        return Ok(d);
    }
    let h = tol::FD_STEP;
    let shift = |t: f64| -> Vec<f64> {
        let mut v = theta.to_vec();
        v[i] += t;
        v
    };
    for t in [h, -h, h / 2.0, -h / 2.0] {
        if !m.contains(&shift(t)) {
            return Err(Error::NearBoundary {
                theta: theta.to_vec(),
                step: h,
            });
        }
    }
    let diff = |t: f64| -> CMatrix {
        (m.state_unchecked(&shift(t)) - m.state_unchecked(&shift(-t))).scale(0.5 / t)
    };
    let d_h = diff(h);
    let d_h2 = diff(h / 2.0);
    // One Richardson extrapolation: (4 D(h/2) - D(h)) / 3.
    let extrapolated = (d_h2.scale(4.0) - d_h).scale(1.0 / 3.0);
    HermitianMatrix::symmetrize(extrapolated)
}

/// Symmetric logarithmic derivatives `L_1..L_d` at `theta`.
///
/// Each `L_i` solves `ρL + Lρ = 2 ∂_i ρ` and is computed in the eigenbasis of
/// ρ as `L_{jk} = 2 (∂ρ)_{jk} / (λ_j + λ_k)`, with entries on index pairs
/// where `λ_j + λ_k` falls below the kernel cutoff set to zero (the
/// minimal-norm representative modulo the kernel ideal).
pub fn sld(m: &dyn Model, theta: &[f64]) -> Result<Vec<HermitianMatrix>> {
    let rho = state_at(m, theta)?;
    let eig = rho.eig();
    (0..m.param_dim())
        .map(|i| {
            let drho = derivative(m, theta, i)?;
            sld_from_derivative(&eig, &drho)
        })
        .collect()
}

/// Solve `ρL + Lρ = 2∂ρ` given the eigendecomposition of ρ.
pub fn sld_from_derivative(eig: &HermEig, drho: &HermitianMatrix) -> Result<HermitianMatrix> {
    let dim = eig.dim();
    if drho.dim() != dim {
        return Err(Error::DimensionMismatch {
            context: "SLD derivative dimension",
            expected: dim,
            got: drho.dim(),
        });
    }
    let cutoff = eig.default_cutoff();
    let u = &eig.eigenvectors;
    let t = u.adjoint() * drho.matrix() * u;
    let mut l = CMatrix::zeros(dim, dim);
    for j in 0..dim {
        for k in 0..dim {
            let denom = eig.eigenvalues[j] + eig.eigenvalues[k];
            if denom >= cutoff.max(f64::MIN_POSITIVE) {
                l[(j, k)] = t[(j, k)].scale(2.0 / denom);
            }
        }
    }
    // Residual check restricted to index pairs outside the kernel.
    let lambda = CMatrix::from_diagonal(&eig.eigenvalues.map(|x| c64(x, 0.0)));
    let resid = &lambda * &l + &l * &lambda - t.scale(2.0);
    let mut max_resid = 0.0f64;
    for j in 0..dim {
        for k in 0..dim {
            if eig.eigenvalues[j] + eig.eigenvalues[k] >= cutoff.max(f64::MIN_POSITIVE) {
                max_resid = max_resid.max(resid[(j, k)].norm());
            }
        }
    }
    if max_resid > tol::SLD_RESIDUAL {
        return Err(Error::ResidualTooLarge {
            residual: max_resid,
            tol: tol::SLD_RESIDUAL,
            context: "SLD Lyapunov equation",
        });
    }
    HermitianMatrix::symmetrize(u * l * u.adjoint())
}

/// SLD Fisher information matrix `J_{ij} = Re Tr(ρ L_j L_i)`.
pub fn sld_fisher(m: &dyn Model, theta: &[f64]) -> Result<RMatrix> {
    let rho = state_at(m, theta)?;
    let slds = sld(m, theta)?;
    Ok(fisher_from_slds(&rho, &slds))
}

/// `J_{ij} = Re Tr(ρ L_j L_i)`, symmetrized.
pub fn fisher_from_slds(rho: &DensityMatrix, slds: &[HermitianMatrix]) -> RMatrix {
    let d = slds.len();
    let j = RMatrix::from_fn(d, d, |i, jx| {
        rho.expect(&(slds[jx].matrix() * slds[i].matrix())).re
    });
    (j.clone() + j.transpose()).scale(0.5)
}

/// Result of the quantum Lebesgue decomposition `σ = RρR + σ⊥`.
#[derive(Debug, Clone)]
pub struct SqrtLikelihoodRatio {
    /// The square-root likelihood ratio, PSD and supported on `supp(ρ)`.
    pub r: HermitianMatrix,
    /// The singular part, PSD after clamping.
    pub sigma_perp: HermitianMatrix,
    /// `Tr ρ σ⊥` (should vanish).
    pub singular_overlap: f64,
    /// Total mass of the singular part, `Tr σ⊥`.
    pub singular_mass: f64,
    /// Max-entry reconstruction residual of `σ - RρR - σ⊥` after clamping.
    pub reconstruction_residual: f64,
    /// Magnitude of the most negative clamped eigenvalue of the raw `σ - RρR`.
    pub clamped_negativity: f64,
}

/// Square-root likelihood ratio of `sigma` relative to `rho`:
/// `R = P [ρ^{-1/2} (ρ^{1/2} σ ρ^{1/2})^{1/2} ρ^{-1/2}] P` with `P` the
/// support projector of ρ and inverses taken on the support.
///
/// Negative eigenvalues of `σ - RρR` smaller than [`tol::SQRT_LR_RESIDUAL`]
/// in magnitude are clamped and reported; anything larger flags numerically
/// pathological near-kernel structure and is returned as an error carrying
/// the residual.
pub fn sqrt_likelihood_ratio(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
) -> Result<SqrtLikelihoodRatio> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            context: "likelihood ratio states",
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    let eig = rho.eig();
    let sqrt_rho = matrix_function_of_eig(&eig, MatrixFunction::Sqrt, KernelPolicy::Default)?;
    let invsqrt_rho = matrix_function_of_eig(&eig, MatrixFunction::InvSqrt, KernelPolicy::Default)?;
    let inner =
        HermitianMatrix::symmetrize(sqrt_rho.matrix() * sigma.matrix() * sqrt_rho.matrix())?;
    let sqrt_inner = linalg::matrix_function(&inner, MatrixFunction::Sqrt, KernelPolicy::Default)?;
    // invsqrt_rho is already support-only, so the sandwich carries the P...P.
    let r = HermitianMatrix::symmetrize(
        invsqrt_rho.matrix() * sqrt_inner.matrix() * invsqrt_rho.matrix(),
    )?;

    let r_rho_r = r.matrix() * rho.matrix() * r.matrix();
    let raw = HermitianMatrix::symmetrize(sigma.matrix() - r_rho_r)?;
    let raw_eig = raw.eig();
    let clamped_negativity = (-raw_eig.lambda_min()).max(0.0);
    let sigma_perp = HermitianMatrix::symmetrize(raw_eig.map_eigenvalues(|x| x.max(0.0)))?;

    let reconstruction = r.matrix() * rho.matrix() * r.matrix() + sigma_perp.matrix();
    let reconstruction_residual = max_abs_diff(&reconstruction, sigma.matrix());
    if reconstruction_residual > tol::SQRT_LR_RESIDUAL {
        return Err(Error::ResidualTooLarge {
            residual: reconstruction_residual,
            tol: tol::SQRT_LR_RESIDUAL,
            context: "quantum Lebesgue decomposition (near-kernel structure)",
        });
    }
    let singular_overlap = rho.expect_herm(&sigma_perp);
    if singular_overlap.abs() > 10.0 * tol::SQRT_LR_SINGULAR_OVERLAP {
        return Err(Error::ResidualTooLarge {
            residual: singular_overlap.abs(),
            tol: tol::SQRT_LR_SINGULAR_OVERLAP,
            context: "singular part overlaps the support of rho",
        });
    }
    let singular_mass = sigma_perp.trace_re();
    Ok(SqrtLikelihoodRatio {
        r,
        sigma_perp,
        singular_overlap,
        singular_mass,
        reconstruction_residual,
        clamped_negativity,
    })
}

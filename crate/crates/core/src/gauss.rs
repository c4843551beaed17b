//! Quantum Gaussian shift families `N((Re τ)h, Σ)`: characteristic and
//! quasi-characteristic functions, the purity criterion `det V = det S`, and
//! the orthogonal splitting of a covariance into classical and quantum blocks.

use nalgebra::DVector;

use crate::linalg::{
    c64, complexify, im_part, max_abs_diff, re_part, real_invsqrt_pd, real_sym_eig, CMatrix,
    HermitianMatrix, RMatrix, RVector, C64,
};
use crate::{tol, Error, Result};

/// The data `(Σ, τ, F)` of a Gaussian shift family `N((Re τ)h, Σ)` with
/// `τ = ΣF`.
#[derive(Debug, Clone)]
pub struct GaussianShiftSpec {
    sigma: CMatrix,
    tau: CMatrix,
    f: RMatrix,
}

impl GaussianShiftSpec {
    pub fn new(sigma: CMatrix, tau: CMatrix, f: RMatrix) -> Result<Self> {
        let r = sigma.nrows();
        let h = HermitianMatrix::with_tol(sigma.clone(), tol::PSD_EIG)?;
        let eig = h.eig();
        if eig.lambda_min() < -tol::PSD_EIG {
            return Err(Error::NotPsd {
                min_eigenvalue: eig.lambda_min(),
            });
        }
        let (re_ev, _) = real_sym_eig(&re_part(&sigma))?;
        if re_ev[0] <= tol::GRAM_MIN_EIG {
            return Err(Error::NotPsd {
                min_eigenvalue: re_ev[0],
            });
        }
        if f.nrows() != r || tau.nrows() != r || tau.ncols() != f.ncols() {
            return Err(Error::DimensionMismatch {
                context: "Gaussian spec shapes",
                expected: r,
                got: f.nrows(),
            });
        }
        let tau_gap = max_abs_diff(&tau, &(&sigma * complexify(&f)));
        if tau_gap > 1e-12 {
            return Err(Error::ResidualTooLarge {
                residual: tau_gap,
                tol: 1e-12,
                context: "tau must equal Sigma F",
            });
        }
        Ok(Self { sigma, tau, f })
    }

    /// Construct from `Σ` and `F`, computing `τ = ΣF`.
    pub fn from_sigma_f(sigma: CMatrix, f: RMatrix) -> Result<Self> {
        let tau = &sigma * complexify(&f);
        Self::new(sigma, tau, f)
    }

    pub fn r(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn d(&self) -> usize {
        self.f.ncols()
    }

    pub fn sigma(&self) -> &CMatrix {
        &self.sigma
    }

    pub fn tau(&self) -> &CMatrix {
        &self.tau
    }

    pub fn f(&self) -> &RMatrix {
        &self.f
    }

    /// `V = Re Σ`.
    pub fn v(&self) -> RMatrix {
        re_part(&self.sigma)
    }

    /// `S = Im Σ` (real skew-symmetric).
    pub fn s(&self) -> RMatrix {
        im_part(&self.sigma)
    }

    /// Mean vector `(Re τ) h`.
    pub fn mean(&self, h: &[f64]) -> Result<RVector> {
        if h.len() != self.d() {
            return Err(Error::DimensionMismatch {
                context: "shift vector length",
                expected: self.d(),
                got: h.len(),
            });
        }
        Ok(re_part(&self.tau) * RVector::from_column_slice(h))
    }
}

fn check_xi(spec: &GaussianShiftSpec, xi: &[f64]) -> Result<RVector> {
    if xi.len() != spec.r() {
        return Err(Error::DimensionMismatch {
            context: "frequency vector length",
            expected: spec.r(),
            got: xi.len(),
        });
    }
    Ok(RVector::from_column_slice(xi))
}

/// Characteristic function `exp(i ξᵀ(Re τ)h - ½ ξᵀ(Re Σ)ξ)`.
pub fn char_function(spec: &GaussianShiftSpec, h: &[f64], xi: &[f64]) -> Result<C64> {
    let xi = check_xi(spec, xi)?;
    let mean = spec.mean(h)?;
    let v = spec.v();
    let phase = xi.dot(&mean);
    let damp = 0.5 * xi.dot(&(&v * &xi));
    Ok(C64::from_polar((-damp).exp(), phase))
}

/// Quasi-characteristic function of the ordered product of Weyl factors
/// `e^{i ξ_t · X}`:
///
/// `exp( Σ_t (i ξ_tᵀ m - ½ ξ_t^i ξ_t^j Σ_{ji}) - Σ_t Σ_{u>t} ξ_t^i ξ_u^j Σ_{ji} )`
///
/// with `m = (Re τ)h`. Reduces to [`char_function`] at a single factor.
pub fn quasi_char_function(spec: &GaussianShiftSpec, h: &[f64], xis: &[Vec<f64>]) -> Result<C64> {
    if xis.is_empty() {
        return Err(Error::Invalid("need at least one frequency vector".into()));
    }
    let mean = spec.mean(h)?;
    let sigma_t = spec.sigma.transpose();
    let mut exponent = c64(0.0, 0.0);
    let vs: Vec<RVector> = xis
        .iter()
        .map(|x| check_xi(spec, x))
        .collect::<Result<Vec<_>>>()?;
    for (t, xt) in vs.iter().enumerate() {
        exponent += c64(0.0, xt.dot(&mean));
        // ξ_t^i ξ_t^j Σ_{ji} = ξ_tᵀ Σᵀ ξ_t
        let xt_c = xt.map(|x| c64(x, 0.0));
        let quad = (xt_c.transpose() * &sigma_t * &xt_c)[(0, 0)];
        exponent -= quad.scale(0.5);
        for xu in vs.iter().skip(t + 1) {
            let xu_c = xu.map(|x| c64(x, 0.0));
            let cross = (xt_c.transpose() * &sigma_t * &xu_c)[(0, 0)];
            exponent -= cross;
        }
    }
    Ok(exponent.exp())
}

/// Purity of the Gaussian state with covariance `Σ = V + iS`.
#[derive(Debug, Clone, Copy)]
pub struct Purity {
    /// `Tr ρ² = sqrt(det S / det V)`.
    pub tr_rho_sq: f64,
    /// `|det V - det S| ≤ tol · |det V|`.
    pub is_pure: bool,
    pub det_v: f64,
    pub det_s: f64,
}

/// Purity criterion for a Gaussian covariance with invertible imaginary part.
///
/// Degenerate (hybrid classical/quantum) covariances must be split with
/// [`split_classical_quantum`] first; a singular `S` is rejected.
pub fn purity(sigma: &CMatrix) -> Result<Purity> {
    let h = HermitianMatrix::with_tol(sigma.clone(), tol::PSD_EIG)?;
    let eig = h.eig();
    if eig.lambda_min() < -tol::PSD_EIG {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.lambda_min(),
        });
    }
    let s = im_part(sigma);
    let svd = s.clone().svd(false, false);
    let min_singular = svd
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min_singular.is_nan() || min_singular <= tol::SKEW_SINGULAR {
        return Err(Error::SingularImaginaryPart { min_singular });
    }
    let v = re_part(sigma);
    let det_v = v.determinant();
    let det_s = s.determinant();
    if det_v <= 0.0 {
        return Err(Error::NotPsd {
            min_eigenvalue: det_v,
        });
    }
    let tr_rho_sq = (det_s.max(0.0) / det_v).sqrt();
    let is_pure = (det_v - det_s).abs() <= tol::PURITY_REL * det_v.abs();
    Ok(Purity {
        tr_rho_sq,
        is_pure,
        det_v,
        det_s,
    })
}

/// Result of splitting a covariance into commuting (classical) and
/// nondegenerate (quantum) blocks.
#[derive(Debug, Clone)]
pub struct SplitForm {
    /// Invertible real transform `T` with `Tᵀ Σ T = Σ_c ⊕ Σ_q`.
    pub transform: RMatrix,
    pub r_c: usize,
    pub r_q: usize,
    /// Classical block (real, here the identity of size `r_c`).
    pub sigma_c: RMatrix,
    /// Quantum block with invertible imaginary part.
    pub sigma_q: CMatrix,
    /// Condition number of the transform.
    pub condition_number: f64,
    /// Max-entry residual of the round trip `Tᵀ Σ T - Σ_c ⊕ Σ_q`.
    pub residual: f64,
}

/// Whiten by `(Re Σ)^{-1/2}` and rotate the resulting skew matrix to the
/// normal form `0 ⊕ S_q` (2×2 blocks sorted by magnitude descending, zero
/// block first).
pub fn split_classical_quantum(sigma: &CMatrix) -> Result<SplitForm> {
    let r = sigma.nrows();
    let h = HermitianMatrix::with_tol(sigma.clone(), tol::PSD_EIG)?;
    let eig = h.eig();
    if eig.lambda_min() < -tol::PSD_EIG {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.lambda_min(),
        });
    }
    let v = re_part(sigma);
    let w = real_invsqrt_pd(&v)?;
    let s_raw = &w * im_part(sigma) * &w;
    let s_white = (s_raw.clone() - s_raw.transpose()).scale(0.5);

    // Eigen-structure of the Hermitian matrix i S': eigenvalues come in
    // ± pairs plus zeros; the ± pair eigenvectors combine into real
    // orthonormal 2x2 block coordinates.
    let hs = HermitianMatrix::symmetrize(s_white.map(|x| c64(0.0, x)))?;
    let heig = hs.eig();
    let mut pairs: Vec<(f64, RVector, RVector)> = Vec::new();
    let mut kernel_vecs: Vec<RVector> = Vec::new();
    for k in 0..r {
        let lam = heig.eigenvalues[k];
        let u = heig.eigenvectors.column(k);
        if lam > tol::SKEW_SINGULAR {
            let x = RVector::from_iterator(r, u.iter().map(|z| z.re * 2f64.sqrt()));
            let y = RVector::from_iterator(r, u.iter().map(|z| z.im * 2f64.sqrt()));
            pairs.push((lam, x, y));
        } else if lam.abs() <= tol::SKEW_SINGULAR {
            kernel_vecs.push(RVector::from_iterator(r, u.iter().map(|z| z.re)));
            kernel_vecs.push(RVector::from_iterator(r, u.iter().map(|z| z.im)));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let r_q = 2 * pairs.len();
    let r_c = r - r_q;

    // Orthonormal real kernel basis from the zero eigenvectors.
    let mut kernel_basis: Vec<RVector> = Vec::new();
    for cand in kernel_vecs {
        let mut v = cand;
        for b in &kernel_basis {
            let c = b.dot(&v);
            v -= b.scale(c);
        }
        let n = v.norm();
        if n > 1e-8 && kernel_basis.len() < r_c {
            kernel_basis.push(v.unscale(n));
        }
    }
    if kernel_basis.len() != r_c {
        return Err(Error::NoConvergence {
            context: "skew normal form kernel extraction",
            iterations: kernel_basis.len(),
            gap: r_c as f64 - kernel_basis.len() as f64,
        });
    }

    let mut columns: Vec<RVector> = kernel_basis;
    for (_lam, x, y) in &pairs {
        // Orient each block so the (1,2) entry of PᵀS'P is positive.
        let g = x.dot(&(&s_white * y));
        if g >= 0.0 {
            columns.push(x.clone());
            columns.push(y.clone());
        } else {
            columns.push(y.clone());
            columns.push(x.clone());
        }
    }
    let p = RMatrix::from_columns(&columns);
    let transform = &w * &p;

    let transformed = complexify(&transform).adjoint() * sigma * complexify(&transform);
    let sigma_c = re_part(&transformed).view((0, 0), (r_c, r_c)).into_owned();
    let sigma_q = transformed.view((r_c, r_c), (r_q, r_q)).into_owned();

    // Round-trip residual against the assembled direct sum.
    let mut direct = CMatrix::zeros(r, r);
    for i in 0..r_c {
        for j in 0..r_c {
            direct[(i, j)] = c64(sigma_c[(i, j)], 0.0);
        }
    }
    for i in 0..r_q {
        for j in 0..r_q {
            direct[(r_c + i, r_c + j)] = sigma_q[(i, j)];
        }
    }
    let residual = max_abs_diff(&transformed, &direct);
    if residual > tol::SPLIT_RESIDUAL {
        return Err(Error::ResidualTooLarge {
            residual,
            tol: tol::SPLIT_RESIDUAL,
            context: "classical/quantum split round trip",
        });
    }
    if r_q > 0 {
        let sq = im_part(&sigma_q);
        let svd = sq.svd(false, false);
        let min_singular = svd
            .singular_values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_singular.is_nan() || min_singular <= tol::SKEW_SINGULAR {
            return Err(Error::SingularImaginaryPart { min_singular });
        }
    }
    let tsvd = transform.clone().svd(false, false);
    let smax = tsvd.singular_values.iter().copied().fold(0.0, f64::max);
    let smin = tsvd
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(SplitForm {
        transform,
        r_c,
        r_q,
        sigma_c,
        sigma_q,
        condition_number: smax / smin,
        residual,
    })
}

/// Assemble the doubled covariance `[[J, J#Jᵀ], [J#Jᵀ, Jᵀ]]`.
pub fn doubled_covariance(j: &CMatrix) -> Result<CMatrix> {
    let d = j.nrows();
    let sharp = complexify(&crate::linalg::sigma_sharp_sigma_t(j)?);
    let mut out = CMatrix::zeros(2 * d, 2 * d);
    for a in 0..d {
        for b in 0..d {
            out[(a, b)] = j[(a, b)];
            out[(a, d + b)] = sharp[(a, b)];
            out[(d + a, b)] = sharp[(a, b)];
            out[(d + a, d + b)] = j[(b, a)];
        }
    }
    Ok(out)
}

/// Gaussian shift spec with mean zero useful in tests: `F = [I_d; 0]`.
pub fn canonical_f(r: usize, d: usize) -> RMatrix {
    let mut f = RMatrix::zeros(r, d);
    for i in 0..d.min(r) {
        f[(i, i)] = 1.0;
    }
    f
}

#[allow(unused)]
fn dvector_from(h: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(h)
}

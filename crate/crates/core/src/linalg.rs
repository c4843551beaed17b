//! Dense complex-matrix kernels.
//!
//! Eigendecomposition is the single backend for every matrix function here;
//! dimensions stay small (≤ 256) so there is no need for Schur or Padé paths.

use nalgebra::{Complex, DMatrix, DVector};

use crate::{tol, Error, Result};

/// Double-precision complex scalar.
pub type C64 = Complex<f64>;
/// Dense complex matrix, the raw carrier for all operators.
pub type CMatrix = DMatrix<C64>;
/// Dense real matrix.
pub type RMatrix = DMatrix<f64>;
/// Dense real vector.
pub type RVector = DVector<f64>;

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Max-entry modulus of a complex matrix.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Max-entry modulus of the difference of two equally sized matrices.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(a - b))
}

/// Entrywise equality within an explicit absolute tolerance.
pub fn approx_eq(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    a.shape() == b.shape() && max_abs_diff(a, b) <= tol
}

/// Embed a real matrix into the complex carrier.
pub fn complexify(m: &RMatrix) -> CMatrix {
    m.map(|x| c64(x, 0.0))
}

/// Complex trace.
pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().sum()
}

fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// A validated Hermitian matrix.
///
/// Construction checks `entries[j,k] = conj(entries[k,j])` within an absolute
/// tolerance ([`tol::HERMITIAN_ABS`] by default) and stores the exactly
/// Hermitian average `(M + M†)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    mat: CMatrix,
}

impl HermitianMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        Self::with_tol(mat, tol::HERMITIAN_ABS)
    }

    pub fn with_tol(mat: CMatrix, tol: f64) -> Result<Self> {
        check_square(&mat)?;
        let max_asymmetry = max_abs_diff(&mat, &mat.adjoint());
        if max_asymmetry > tol {
            return Err(Error::NotHermitian { max_asymmetry, tol });
        }
        Ok(Self {
            mat: (&mat + mat.adjoint()).scale(0.5),
        })
    }

    /// Force-symmetrize `(M + M†)/2` without an asymmetry check. Meant for
    /// results of floating-point arithmetic that are Hermitian up to rounding.
    pub fn symmetrize(mat: CMatrix) -> Result<Self> {
        check_square(&mat)?;
        Ok(Self {
            mat: (&mat + mat.adjoint()).scale(0.5),
        })
    }

    pub fn from_real(mat: &RMatrix) -> Result<Self> {
        Self::new(complexify(mat))
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: CMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// Real trace (the imaginary part of a Hermitian trace is zero).
    pub fn trace_re(&self) -> f64 {
        trace(&self.mat).re
    }

    /// Eigendecomposition with eigenvalues sorted ascending.
    pub fn eig(&self) -> HermEig {
        herm_eig(self)
    }

    /// Linear combination `self + c * other`.
    pub fn add_scaled(&self, other: &Self, c: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                context: "Hermitian matrix sum",
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(Self {
            mat: &self.mat + other.mat.scale(c),
        })
    }
}

/// Eigendecomposition `H = U diag(λ) U†` of a Hermitian matrix, eigenvalues
/// ascending, `U` unitary.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub eigenvalues: RVector,
    pub eigenvectors: CMatrix,
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
pub fn herm_eig(h: &HermitianMatrix) -> HermEig {
    let se = h.mat.clone().symmetric_eigen();
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let eigenvalues = RVector::from_iterator(n, order.iter().map(|&i| se.eigenvalues[i]));
    let eigenvectors = CMatrix::from_columns(
        &order
            .iter()
            .map(|&i| se.eigenvectors.column(i).clone_owned())
            .collect::<Vec<_>>(),
    );
    HermEig {
        eigenvalues,
        eigenvectors,
    }
}

impl HermEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `U f(diag λ) U†` for a scalar function of the eigenvalues.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let d = CMatrix::from_diagonal(&self.eigenvalues.map(|x| c64(f(x), 0.0)));
        &self.eigenvectors * d * self.eigenvectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map_eigenvalues(|x| x)
    }

    /// Projector onto the span of eigenvectors with eigenvalue ≥ `cutoff`.
    pub fn support_projector(&self, cutoff: f64) -> CMatrix {
        self.map_eigenvalues(|x| if x >= cutoff { 1.0 } else { 0.0 })
    }

    /// Relative kernel cutoff `KERNEL_REL * λ_max` (never negative).
    pub fn default_cutoff(&self) -> f64 {
        tol::KERNEL_REL * self.lambda_max().max(0.0)
    }
}

/// Scalar functions applied to the spectrum of a Hermitian matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFunction {
    Sqrt,
    Log,
    Exp,
    Abs,
    InvSqrt,
}

impl MatrixFunction {
    pub fn name(&self) -> &'static str {
        match self {
            MatrixFunction::Sqrt => "sqrt",
            MatrixFunction::Log => "log",
            MatrixFunction::Exp => "exp",
            MatrixFunction::Abs => "abs",
            MatrixFunction::InvSqrt => "inv-sqrt",
        }
    }

    fn needs_psd(&self) -> bool {
        matches!(
            self,
            MatrixFunction::Sqrt | MatrixFunction::Log | MatrixFunction::InvSqrt
        )
    }

    fn needs_kernel_policy(&self) -> bool {
        matches!(self, MatrixFunction::Log | MatrixFunction::InvSqrt)
    }
}

/// Kernel handling for `log` and `inv-sqrt`.
///
/// Eigenvalues below the cutoff are treated as exact zeros and excluded from
/// the function (their spectral component maps to 0). With [`KernelPolicy::None`]
/// those functions reject any eigenvalue below the default cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelPolicy {
    /// Cutoff `KERNEL_REL * λ_max`.
    Default,
    /// Caller-supplied absolute cutoff.
    Cutoff(f64),
    /// No kernel allowed: eigenvalues below the default cutoff are an error.
    None,
}

/// Apply a scalar function to the spectrum of `h` in its eigenbasis.
///
/// For `sqrt`, `log`, and `inv-sqrt` the spectrum must be ≥ `-NEG_SPECTRUM`;
/// eigenvalues in `[-NEG_SPECTRUM, 0)` are clamped to zero.
pub fn matrix_function(
    h: &HermitianMatrix,
    f: MatrixFunction,
    kernel: KernelPolicy,
) -> Result<HermitianMatrix> {
    let eig = h.eig();
    matrix_function_of_eig(&eig, f, kernel)
}

/// Same as [`matrix_function`] but reusing an existing eigendecomposition.
pub fn matrix_function_of_eig(
    eig: &HermEig,
    f: MatrixFunction,
    kernel: KernelPolicy,
) -> Result<HermitianMatrix> {
    let mut lambda: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if f.needs_psd() {
        let min = eig.lambda_min();
        if min < -tol::NEG_SPECTRUM {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
        for x in &mut lambda {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
    }
    let cutoff = match kernel {
        KernelPolicy::Default => eig.default_cutoff(),
        KernelPolicy::Cutoff(c) => c,
        KernelPolicy::None => eig.default_cutoff(),
    };
    if f.needs_kernel_policy() {
        if let KernelPolicy::None = kernel {
            if let Some(&bad) = lambda.iter().find(|&&x| x < cutoff) {
                return Err(Error::KernelEigenvalue {
                    value: bad,
                    function: f.name(),
                });
            }
        }
    }
    let apply = |x: f64| -> f64 {
        match f {
            MatrixFunction::Sqrt => x.sqrt(),
            MatrixFunction::Exp => x.exp(),
            MatrixFunction::Abs => x.abs(),
            MatrixFunction::Log => {
                if x < cutoff {
                    0.0
                } else {
                    x.ln()
                }
            }
            MatrixFunction::InvSqrt => {
                if x < cutoff {
                    0.0
                } else {
                    1.0 / x.sqrt()
                }
            }
        }
    };
    let d = CMatrix::from_diagonal(&RVector::from_vec(lambda).map(|x| c64(apply(x), 0.0)));
    let out = &eig.eigenvectors * d * eig.eigenvectors.adjoint();
    HermitianMatrix::symmetrize(out)
}

fn check_psd_for_mean(h: &HermitianMatrix) -> Result<HermEig> {
    let eig = h.eig();
    let floor = -tol::PSD_EIG * eig.lambda_max().abs().max(1.0);
    if eig.lambda_min() < floor {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.lambda_min(),
        });
    }
    Ok(eig)
}

/// Operator geometric mean `A#B = A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}`.
///
/// For singular `A` the mean is computed as the limit of `(A+εI)#B` with ε
/// shrinking geometrically until two successive results agree within
/// [`tol::GEOMEAN_STABILIZE`] in max-entry norm. Indefinite input is rejected.
pub fn geometric_mean(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<HermitianMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            context: "geometric mean",
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let ea = check_psd_for_mean(a)?;
    check_psd_for_mean(b)?;

    let scale = ea.lambda_max().max(1.0);
    if ea.lambda_min() > tol::KERNEL_REL * scale {
        return geometric_mean_invertible(&ea, b);
    }

    // Singular left argument: ε-regularized limit.
    let mut eps = 1e-4 * scale;
    let mut prev = regularized_mean(a, b, eps)?;
    for _ in 0..40 {
        eps *= 0.25;
        let next = regularized_mean(a, b, eps)?;
        if max_abs_diff(prev.matrix(), next.matrix()) < tol::GEOMEAN_STABILIZE {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NoConvergence {
        context: "epsilon-regularized geometric mean",
        iterations: 40,
        gap: f64::NAN,
    })
}

fn regularized_mean(a: &HermitianMatrix, b: &HermitianMatrix, eps: f64) -> Result<HermitianMatrix> {
    let reg = a.add_scaled(&HermitianMatrix::identity(a.dim()), eps)?;
    geometric_mean_invertible(&reg.eig(), b)
}

fn geometric_mean_invertible(ea: &HermEig, b: &HermitianMatrix) -> Result<HermitianMatrix> {
    let sqrt_a = ea.map_eigenvalues(|x| x.max(0.0).sqrt());
    let invsqrt_a = ea.map_eigenvalues(|x| 1.0 / x.max(f64::MIN_POSITIVE).sqrt());
    let inner = HermitianMatrix::symmetrize(&invsqrt_a * b.matrix() * &invsqrt_a)?;
    let sqrt_inner = matrix_function(&inner, MatrixFunction::Sqrt, KernelPolicy::Default)?;
    HermitianMatrix::symmetrize(&sqrt_a * sqrt_inner.matrix() * &sqrt_a)
}

/// `Σ # Σᵀ` for a Hermitian PSD `Σ` with `Re Σ ≻ 0`, via the closed form
/// `V^{1/2} { I + (V^{-1/2} S V^{-1/2})² }^{1/2} V^{1/2}` with `V = Re Σ`,
/// `S = Im Σ`. The result is real symmetric.
pub fn sigma_sharp_sigma_t(sigma: &CMatrix) -> Result<RMatrix> {
    let n = check_square(sigma)?;
    let v = re_part(sigma);
    let s = im_part(sigma);
    let (ev, evecs) = real_sym_eig(&v)?;
    let vmax = ev[n - 1].abs().max(1.0);
    if ev[0] <= tol::GRAM_MIN_EIG * vmax {
        return Err(Error::NotPsd {
            min_eigenvalue: ev[0],
        });
    }
    let vsqrt = real_apply(&ev, &evecs, f64::sqrt);
    let vinvs = real_apply(&ev, &evecs, |x| 1.0 / x.sqrt());
    let sv = &vinvs * &s * &vinvs;
    let inner = RMatrix::identity(n, n) + &sv * &sv.transpose().scale(-1.0);
    // S is skew, so Sᵥ² = -SᵥSᵥᵀ and I + Sᵥ² written as I - Sᵥ Sᵥᵀ is
    // symmetric PSD by construction.
    let inner = (inner.clone() + inner.transpose()).scale(0.5);
    let (iev, ivecs) = real_sym_eig(&inner)?;
    let isqrt = real_apply(&iev, &ivecs, |x| x.max(0.0).sqrt());
    let out = &vsqrt * isqrt * &vsqrt;
    Ok((out.clone() + out.transpose()).scale(0.5))
}

/// Real part of a complex matrix.
pub fn re_part(m: &CMatrix) -> RMatrix {
    m.map(|z| z.re)
}

/// Imaginary part of a complex matrix.
pub fn im_part(m: &CMatrix) -> RMatrix {
    m.map(|z| z.im)
}

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
pub fn real_sym_eig(m: &RMatrix) -> Result<(RVector, RMatrix)> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let sym = (m + m.transpose()).scale(0.5);
    let se = sym.symmetric_eigen();
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let vals = RVector::from_iterator(n, order.iter().map(|&i| se.eigenvalues[i]));
    let vecs = RMatrix::from_columns(
        &order
            .iter()
            .map(|&i| se.eigenvectors.column(i).clone_owned())
            .collect::<Vec<_>>(),
    );
    Ok((vals, vecs))
}

fn real_apply(ev: &RVector, evecs: &RMatrix, f: impl Fn(f64) -> f64) -> RMatrix {
    let d = RMatrix::from_diagonal(&ev.map(&f));
    evecs * d * evecs.transpose()
}

/// Square root of a real symmetric PSD matrix (small negatives clamped).
pub fn real_sqrt_psd(m: &RMatrix) -> Result<RMatrix> {
    let (ev, evecs) = real_sym_eig(m)?;
    let floor = -tol::PSD_EIG * ev[ev.len() - 1].abs().max(1.0);
    if ev[0] < floor {
        return Err(Error::NotPsd {
            min_eigenvalue: ev[0],
        });
    }
    Ok(real_apply(&ev, &evecs, |x| x.max(0.0).sqrt()))
}

/// Inverse square root of a real symmetric positive definite matrix.
pub fn real_invsqrt_pd(m: &RMatrix) -> Result<RMatrix> {
    let (ev, evecs) = real_sym_eig(m)?;
    if ev[0] <= tol::GRAM_MIN_EIG * ev[ev.len() - 1].abs().max(1.0) {
        return Err(Error::NotPsd {
            min_eigenvalue: ev[0],
        });
    }
    Ok(real_apply(&ev, &evecs, |x| 1.0 / x.sqrt()))
}

/// Trace norm (sum of singular values) of a square complex matrix.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    check_square(m)?;
    let svd = m.clone().svd(false, false);
    Ok(svd.singular_values.iter().sum())
}

/// Kronecker product.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `n`-fold Kronecker power.
pub fn kron_power(a: &CMatrix, n: usize) -> CMatrix {
    assert!(n >= 1, "kron_power needs n >= 1");
    let mut out = a.clone();
    for _ in 1..n {
        out = kron(&out, a);
    }
    out
}

/// Partial trace of a square matrix on a declared tensor factorization.
///
/// `dims` are the factor dimensions in Kronecker order (their product must be
/// the matrix dimension) and `keep` lists the factor indices to retain, in
/// ascending order. The trace is preserved: `Tr(out) = Tr(m)`.
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let n = check_square(m)?;
    let total: usize = dims.iter().product();
    if total != n || dims.contains(&0) {
        return Err(Error::DimensionMismatch {
            context: "partial trace factorization",
            expected: n,
            got: total,
        });
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Invalid(
            "keep indices must be strictly ascending and in range".into(),
        ));
    }

    let f = dims.len();
    // Row-major strides over factors.
    let mut strides = vec![1usize; f];
    for i in (0..f.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let out_dim: usize = kept_dims.iter().product();
    let traced: Vec<usize> = (0..f).filter(|i| !keep.contains(i)).collect();

    let mut out = CMatrix::zeros(out_dim, out_dim);
    let decompose = |idx: usize| -> Vec<usize> {
        let mut digits = vec![0usize; f];
        let mut rest = idx;
        for i in 0..f {
            digits[i] = rest / strides[i];
            rest %= strides[i];
        }
        digits
    };
    let kept_index = |digits: &[usize]| -> usize {
        let mut idx = 0;
        for &k in keep {
            idx = idx * dims[k] + digits[k];
        }
        idx
    };

    for r in 0..n {
        let rd = decompose(r);
        for c in 0..n {
            let cd = decompose(c);
            if traced.iter().all(|&t| rd[t] == cd[t]) {
                out[(kept_index(&rd), kept_index(&cd))] += m[(r, c)];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{rand_herm, rand_psd, rand_unitary, Rng};

    #[test]
    fn herm_eig_identity_and_pauli_spectrum() {
        let id = HermitianMatrix::identity(2);
        let eig = id.eig();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-14);

        let sx = HermitianMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[c64(0., 0.), c64(1., 0.), c64(1., 0.), c64(0., 0.)],
        ))
        .unwrap();
        let eig = sx.eig();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn herm_eig_reconstruction_residual() {
        let mut rng = Rng::seed_from_u64(7);
        let h = rand_herm(&mut rng, 8);
        let eig = h.eig();
        let resid = max_abs_diff(&eig.reconstruct(), h.matrix());
        assert!(resid < 1e-10, "residual {resid}");
    }

    #[test]
    fn herm_eig_rejects_asymmetric_input() {
        let m =
            CMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(1., 0.), c64(0.5, 0.), c64(0., 0.)]);
        let err = HermitianMatrix::new(m).unwrap_err();
        match err {
            Error::NotHermitian { max_asymmetry, .. } => {
                assert!((max_asymmetry - 0.5).abs() < 1e-12)
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn herm_eig_residuals_random_dims() {
        // reconstruction and unitarity residuals <= 1e-10 * dim, 1000 draws
        let mut rng = Rng::seed_from_u64(42);
        for trial in 0..1000 {
            let dim = 2 + (trial % 15);
            let h = rand_herm(&mut rng, dim);
            let eig = h.eig();
            let resid = max_abs_diff(&eig.reconstruct(), h.matrix());
            let unit = max_abs_diff(
                &(eig.eigenvectors.adjoint() * &eig.eigenvectors),
                &CMatrix::identity(dim, dim),
            );
            let bound = 1e-10 * dim as f64;
            assert!(resid <= bound, "dim {dim} reconstruction {resid}");
            assert!(unit <= bound, "dim {dim} unitarity {unit}");
            assert!(eig.eigenvalues.as_slice().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn matrix_function_diagonal_cases() {
        let h =
            HermitianMatrix::from_real(&RMatrix::from_diagonal(&RVector::from_vec(vec![4.0, 9.0])))
                .unwrap();
        let s = matrix_function(&h, MatrixFunction::Sqrt, KernelPolicy::Default).unwrap();
        let expected = complexify(&RMatrix::from_diagonal(&RVector::from_vec(vec![2.0, 3.0])));
        assert!(approx_eq(s.matrix(), &expected, 1e-13));

        let zero = HermitianMatrix::zeros(3);
        let e = matrix_function(&zero, MatrixFunction::Exp, KernelPolicy::Default).unwrap();
        assert!(approx_eq(e.matrix(), &CMatrix::identity(3, 3), 1e-14));
    }

    #[test]
    fn matrix_sqrt_squares_back() {
        let mut rng = Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = rand_psd(&mut rng, 6);
            let s = matrix_function(&a, MatrixFunction::Sqrt, KernelPolicy::Default).unwrap();
            let resid = max_abs_diff(&(s.matrix() * s.matrix()), a.matrix());
            assert!(resid < 1e-10, "residual {resid}");
        }
    }

    #[test]
    fn matrix_log_requires_kernel_policy() {
        let h =
            HermitianMatrix::from_real(&RMatrix::from_diagonal(&RVector::from_vec(vec![1.0, 0.0])))
                .unwrap();
        let err = matrix_function(&h, MatrixFunction::Log, KernelPolicy::None).unwrap_err();
        assert!(matches!(err, Error::KernelEigenvalue { .. }));
        // with the default policy the kernel is excluded
        let l = matrix_function(&h, MatrixFunction::Log, KernelPolicy::Default).unwrap();
        assert!(max_abs(l.matrix()) < 1e-14);
    }

    #[test]
    fn matrix_abs_handles_indefinite_input() {
        let h = HermitianMatrix::from_real(&RMatrix::from_diagonal(&RVector::from_vec(vec![
            1.5, -2.0,
        ])))
        .unwrap();
        let a = matrix_function(&h, MatrixFunction::Abs, KernelPolicy::Default).unwrap();
        let expected = complexify(&RMatrix::from_diagonal(&RVector::from_vec(vec![1.5, 2.0])));
        assert!(approx_eq(a.matrix(), &expected, 1e-14));
    }

    #[test]
    fn matrix_function_rejects_indefinite_sqrt() {
        let h = HermitianMatrix::from_real(&RMatrix::from_diagonal(&RVector::from_vec(vec![
            1.0, -0.5,
        ])))
        .unwrap();
        assert!(matches!(
            matrix_function(&h, MatrixFunction::Sqrt, KernelPolicy::Default),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn geometric_mean_idempotent_and_identity() {
        let a =
            HermitianMatrix::from_real(&RMatrix::from_diagonal(&RVector::from_vec(vec![1.0, 3.0])))
                .unwrap();
        let m = geometric_mean(&a, &a).unwrap();
        assert!(approx_eq(m.matrix(), a.matrix(), 1e-12));

        let b = HermitianMatrix::from_real(&RMatrix::from_diagonal(&RVector::from_vec(vec![
            4.0, 16.0,
        ])))
        .unwrap();
        let id = HermitianMatrix::identity(2);
        let m = geometric_mean(&id, &b).unwrap();
        let expected = complexify(&RMatrix::from_diagonal(&RVector::from_vec(vec![2.0, 4.0])));
        assert!(approx_eq(m.matrix(), &expected, 1e-10));
    }

    #[test]
    fn geometric_mean_j_sharp_jt_closed_form() {
        // J = 2I + iS with S = [[0,1],[-1,0]]: J # Jᵀ = sqrt(3) I.
        let j =
            CMatrix::from_row_slice(2, 2, &[c64(2., 0.), c64(0., 1.), c64(0., -1.), c64(2., 0.)]);
        let jt = j.transpose();
        let a = HermitianMatrix::new(j.clone()).unwrap();
        let b = HermitianMatrix::new(jt).unwrap();
        let generic = geometric_mean(&a, &b).unwrap();
        let expected = CMatrix::identity(2, 2).scale(3f64.sqrt());
        assert!(approx_eq(generic.matrix(), &expected, 1e-10));

        let closed = sigma_sharp_sigma_t(&j).unwrap();
        assert!(max_abs_diff(&complexify(&closed), &expected) < 1e-12);
    }

    #[test]
    fn geometric_mean_two_routes_agree() {
        let mut rng = Rng::seed_from_u64(11);
        for _ in 0..100 {
            let dim = 2 + (rng.next_index(3));
            let sigma = crate::testutil::rand_sigma_psd(&mut rng, dim);
            let a = HermitianMatrix::new(sigma.clone()).unwrap();
            let b = HermitianMatrix::new(sigma.transpose()).unwrap();
            let generic = geometric_mean(&a, &b).unwrap();
            let closed = sigma_sharp_sigma_t(&sigma).unwrap();
            let gap = max_abs_diff(generic.matrix(), &complexify(&closed));
            assert!(gap <= 1e-9, "route gap {gap}");
        }
    }

    #[test]
    fn geometric_mean_symmetry_and_agm() {
        let mut rng = Rng::seed_from_u64(5);
        for _ in 0..60 {
            let dim = 2 + rng.next_index(3);
            let a = rand_psd(&mut rng, dim);
            let b = rand_psd(&mut rng, dim);
            let ab = geometric_mean(&a, &b).unwrap();
            let ba = geometric_mean(&b, &a).unwrap();
            assert!(max_abs_diff(ab.matrix(), ba.matrix()) < 1e-9);
            // PSD and dominated by the arithmetic mean
            let eig = ab.eig();
            assert!(eig.lambda_min() > -1e-9);
            let arith = a.add_scaled(&b, 1.0).unwrap().matrix().scale(0.5);
            let diff = HermitianMatrix::symmetrize(arith - ab.matrix()).unwrap();
            assert!(diff.eig().lambda_min() > -1e-9);
        }
    }

    #[test]
    fn geometric_mean_singular_left_argument() {
        // A singular, B = I: A # I = sqrt(A).
        let a =
            HermitianMatrix::from_real(&RMatrix::from_diagonal(&RVector::from_vec(vec![4.0, 0.0])))
                .unwrap();
        let id = HermitianMatrix::identity(2);
        let m = geometric_mean(&a, &id).unwrap();
        let expected = complexify(&RMatrix::from_diagonal(&RVector::from_vec(vec![2.0, 0.0])));
        assert!(approx_eq(m.matrix(), &expected, 1e-6));
    }

    #[test]
    fn geometric_mean_rejects_indefinite() {
        let a = HermitianMatrix::from_real(&RMatrix::from_diagonal(&RVector::from_vec(vec![
            1.0, -1.0,
        ])))
        .unwrap();
        let id = HermitianMatrix::identity(2);
        assert!(matches!(geometric_mean(&a, &id), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn trace_norm_examples() {
        let d = complexify(&RMatrix::from_diagonal(&RVector::from_vec(vec![1.0, -2.0])));
        assert!((trace_norm(&d).unwrap() - 3.0).abs() < 1e-12);

        let a = 0.7;
        let skew =
            CMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(a, 0.), c64(-a, 0.), c64(0., 0.)]);
        assert!((trace_norm(&skew).unwrap() - 1.4).abs() < 1e-12);

        let mut rng = Rng::seed_from_u64(9);
        let u = rand_unitary(&mut rng, 5);
        assert!((trace_norm(&u).unwrap() - 5.0).abs() < 1e-10);
    }

    #[test]
    fn trace_norm_unitary_invariance() {
        let mut rng = Rng::seed_from_u64(13);
        for _ in 0..50 {
            let dim = 2 + rng.next_index(4);
            let a = crate::testutil::rand_complex(&mut rng, dim, dim);
            let u = rand_unitary(&mut rng, dim);
            let v = rand_unitary(&mut rng, dim);
            let t1 = trace_norm(&a).unwrap();
            let t2 = trace_norm(&(&u * &a * &v)).unwrap();
            assert!((t1 - t2).abs() < 1e-9, "gap {}", (t1 - t2).abs());
        }
    }

    #[test]
    fn kron_identity() {
        let id2 = CMatrix::identity(2, 2);
        assert!(approx_eq(&kron(&id2, &id2), &CMatrix::identity(4, 4), 0.0));
    }

    #[test]
    fn partial_trace_product_state() {
        let mut rng = Rng::seed_from_u64(21);
        let rho = crate::testutil::rand_density(&mut rng, 2);
        let sigma = rand_herm(&mut rng, 3);
        let prod = kron(rho.matrix(), sigma.matrix());
        let reduced = partial_trace(&prod, &[2, 3], &[0]).unwrap();
        let expected = rho.matrix().scale(sigma.trace_re());
        assert!(approx_eq(&reduced, &expected, 1e-12));
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let mut rng = Rng::seed_from_u64(22);
        let m = crate::testutil::rand_complex(&mut rng, 8, 8);
        let pt = partial_trace(&m, &[4, 2], &[1]).unwrap();
        let (t1, t2) = (trace(&m), trace(&pt));
        assert!((t1 - t2).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_factorization() {
        let m = CMatrix::identity(6, 6);
        assert!(partial_trace(&m, &[4, 2], &[0]).is_err());
    }

    #[test]
    fn partial_trace_three_factors_keep_two() {
        let mut rng = Rng::seed_from_u64(29);
        let a = crate::testutil::rand_density(&mut rng, 2);
        let b = crate::testutil::rand_density(&mut rng, 2);
        let c = crate::testutil::rand_density(&mut rng, 3);
        let abc = kron(&kron(a.matrix(), b.matrix()), c.matrix());
        let kept = partial_trace(&abc, &[2, 2, 3], &[0, 2]).unwrap();
        let expected = kron(a.matrix(), c.matrix());
        assert!(approx_eq(&kept, &expected, 1e-12));
    }
}

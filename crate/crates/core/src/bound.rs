//! The representation bound: the Holevo bound of the limiting Gaussian shift
//! family, computed as a small semidefinite program.
//!
//! The nonsmooth objective `Tr G Re Z + Tr|√G Im Z √G|` over `Z = KᵀΣK`,
//! `Kᵀ(Re τ) = I`, is lifted to the epigraph form
//!
//! `min Tr(GV)  s.t.  V ⪰ KᵀΣK,  Kᵀ(Re τ) = I`
//!
//! whose matrix inequality is the Schur-complement block condition
//! `[[V, KᵀΣ^{1/2}], [Σ^{1/2}K, I]] ⪰ 0`, jointly convex in `(V, K)`. The
//! equality constraint is made implicit by parametrizing
//! `K = K_p + N B` with `K_p = (Re τ)((Re τ)ᵀ(Re τ))^{-1}` and `N` a basis of
//! the null space of `(Re τ)ᵀ`. A log-det barrier with decreasing weight and
//! damped Newton steps solves the smooth subproblems; the trace-norm term is
//! recovered in closed form from the optimizer.

use crate::linalg::{
    c64, complexify, im_part, matrix_function, re_part, real_invsqrt_pd, real_sqrt_psd,
    real_sym_eig, trace_norm, CMatrix, HermitianMatrix, KernelPolicy, MatrixFunction, RMatrix,
    RVector,
};
use crate::model::{self, Model};
use crate::{tol, Error, Result};

/// Barrier solver controls. The defaults match the shipped configuration:
/// `μ_k = μ_0 · 0.25^k`, terminating once `μ · (barrier dimension) < 1e-9`.
#[derive(Debug, Clone)]
pub struct BarrierOptions {
    pub mu0: f64,
    pub shrink: f64,
    pub gap_tol: f64,
    pub max_total_newton: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            mu0: 1.0,
            shrink: 0.25,
            gap_tol: tol::BARRIER_GAP,
            max_total_newton: 5000,
        }
    }
}

/// Solver diagnostics attached to a [`BoundResult`].
#[derive(Debug, Clone, Copy)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    /// `μ_final · (barrier dimension)`, a duality-style gap estimate.
    pub gap_estimate: f64,
}

/// The bound value together with its optimizer data.
///
/// Guarantees: `K*ᵀ(Re τ) = I` within 1e-8, `value = Tr(G Re Z*) +
/// Tr|√G Im Z* √G|` by construction, `V* ⪰ Z*` and `Tr(G V*) = value`
/// within 1e-8.
#[derive(Debug, Clone)]
pub struct BoundResult {
    pub value: f64,
    pub k_star: RMatrix,
    pub z_star: CMatrix,
    pub v_star: RMatrix,
    pub diagnostics: SolverDiagnostics,
}

/// Minimize `Tr G Z + Tr|√G Im Z √G|` over `Z = KᵀΣK` with `Kᵀ(Re τ) = I`.
pub fn rep_bound(sigma: &CMatrix, tau: &CMatrix, g: &RMatrix) -> Result<BoundResult> {
    rep_bound_with_options(sigma, tau, g, &BarrierOptions::default())
}

pub fn rep_bound_with_options(
    sigma: &CMatrix,
    tau: &CMatrix,
    g: &RMatrix,
    opts: &BarrierOptions,
) -> Result<BoundResult> {
    let r = sigma.nrows();
    if sigma.ncols() != r {
        return Err(Error::NotSquare {
            rows: r,
            cols: sigma.ncols(),
        });
    }
    let d = tau.ncols();
    if tau.nrows() != r || d == 0 || d > r {
        return Err(Error::DimensionMismatch {
            context: "tau must be r x d with 1 <= d <= r",
            expected: r,
            got: tau.nrows(),
        });
    }
    if g.nrows() != d || g.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: "weight matrix",
            expected: d,
            got: g.nrows(),
        });
    }
    let sigma_h = HermitianMatrix::with_tol(sigma.clone(), tol::PSD_EIG)?;
    let (rev, _) = real_sym_eig(&re_part(sigma))?;
    if rev[0] <= tol::GRAM_MIN_EIG {
        return Err(Error::NotPsd {
            min_eigenvalue: rev[0],
        });
    }
    let (gev, _) = real_sym_eig(g)?;
    if gev[0] <= 1e-12 * gev[gev.len() - 1].abs().max(1.0) {
        return Err(Error::Invalid(format!(
            "weight matrix must be strictly positive definite (min eigenvalue {:.3e})",
            gev[0]
        )));
    }

    let re_tau = re_part(tau);
    let svd = re_tau.clone().svd(false, false);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let smin = svd
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if smin.is_nan() || smin <= 1e-10 * smax.max(1.0) {
        return Err(Error::Invalid(format!(
            "Re tau must have full column rank d (min singular value {smin:.3e})"
        )));
    }

    // K_p = (Re τ)((Re τ)ᵀ(Re τ))^{-1}; N spans null((Re τ)ᵀ).
    let gram = re_tau.transpose() * &re_tau;
    let gram_inv = gram
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Invalid("(Re tau)ᵀ(Re tau) is numerically singular".into()))?;
    let k_p = &re_tau * gram_inv;
    let null_basis = orthonormal_null_basis(&re_tau)?;
    let n_free = null_basis.len();

    let sqrt_sigma = matrix_function(&sigma_h, MatrixFunction::Sqrt, KernelPolicy::Default)?;
    let sqrt_sigma = sqrt_sigma.matrix().clone();

    let problem = BarrierProblem {
        r,
        d,
        sigma: sigma.clone(),
        sqrt_sigma,
        g: g.clone(),
        k_p,
        null_basis,
    };

    let (x, iterations, gap_estimate) = problem.solve(opts)?;
    let k_star = problem.k_of(&x);
    let z_star = k_star.map(|v| c64(v, 0.0)).transpose() * sigma * k_star.map(|v| c64(v, 0.0));
    let z_star = (&z_star + z_star.adjoint()).scale(0.5);

    // Constraint certification.
    let constraint_gap = (k_star.transpose() * &re_tau - RMatrix::identity(d, d))
        .abs()
        .max();
    if constraint_gap > tol::BOUND_CERT {
        return Err(Error::NoConvergence {
            context: "constraint K^T (Re tau) = I violated at the optimizer",
            iterations,
            gap: constraint_gap,
        });
    }

    let (value, v_star) = value_and_vstar(&z_star, g)?;
    let _ = n_free;
    let res = BoundResult {
        value,
        k_star,
        z_star,
        v_star,
        diagnostics: SolverDiagnostics {
            iterations,
            gap_estimate,
        },
    };
    // Certify the result invariants before handing it out.
    optimal_covariance(&res, g)?;
    Ok(res)
}

/// `Tr G Re Z + Tr|√G Im Z √G|` together with the optimal covariance
/// `V = Re Z + √G^{-1} |√G Im Z √G| √G^{-1}`.
pub fn value_and_vstar(z: &CMatrix, g: &RMatrix) -> Result<(f64, RMatrix)> {
    let re_z = re_part(z);
    let im_z = im_part(z);
    let sqrt_g = real_sqrt_psd(g)?;
    let invsqrt_g = real_invsqrt_pd(g)?;
    let w = &sqrt_g * &im_z * &sqrt_g;
    let value = (g * &re_z).trace() + trace_norm(&complexify(&w))?;
    // |W| for real skew W equals (WᵀW)^{1/2}.
    let abs_w = real_sqrt_psd(&(w.transpose() * &w))?;
    let v_star = &re_z + &invsqrt_g * abs_w * &invsqrt_g;
    let v_star = (v_star.clone() + v_star.transpose()).scale(0.5);
    Ok((value, v_star))
}

/// Evaluate the raw objective at a given `K` (no optimization); shared by the
/// solver postprocessing and by direct-search oracles.
pub fn objective_at_k(sigma: &CMatrix, g: &RMatrix, k: &RMatrix) -> Result<f64> {
    let kc = k.map(|v| c64(v, 0.0));
    let z = kc.transpose() * sigma * &kc;
    let z = (&z + z.adjoint()).scale(0.5);
    Ok(value_and_vstar(&z, g)?.0)
}

/// Certify and return the optimal covariance `V*` of a bound result:
/// `Tr(G V*) = value` and `V* ⪰ Z*`, both within 1e-8.
pub fn optimal_covariance(res: &BoundResult, g: &RMatrix) -> Result<RMatrix> {
    let tr = (g * &res.v_star).trace();
    if (tr - res.value).abs() > tol::BOUND_CERT * res.value.abs().max(1.0) {
        return Err(Error::NoConvergence {
            context: "Tr(G V*) disagrees with the bound value",
            iterations: res.diagnostics.iterations,
            gap: (tr - res.value).abs(),
        });
    }
    let diff = HermitianMatrix::symmetrize(complexify(&res.v_star) - &res.z_star)?;
    let min_eig = diff.eig().lambda_min();
    if min_eig < -tol::BOUND_CERT {
        return Err(Error::NoConvergence {
            context: "V* ⪰ Z* certification failed",
            iterations: res.diagnostics.iterations,
            gap: -min_eig,
        });
    }
    Ok(res.v_star.clone())
}

/// The full i.i.d. pipeline: SLDs → invariant extension → representation
/// bound. For an i.i.d. model this is the Holevo bound of the base model.
pub fn holevo_bound_iid(m: &dyn Model, theta0: &[f64], g: &RMatrix) -> Result<BoundResult> {
    let rho = model::state_at(m, theta0)?;
    let slds = model::sld(m, theta0)?;
    let ext = crate::dext::build_d_extension(&rho, &slds)?;
    rep_bound(&ext.sigma, &ext.tau, g)
}

fn orthonormal_null_basis(re_tau: &RMatrix) -> Result<Vec<RVector>> {
    let r = re_tau.nrows();
    let d = re_tau.ncols();
    let mut range: Vec<RVector> = Vec::with_capacity(d);
    for j in 0..d {
        let mut v = re_tau.column(j).clone_owned();
        for b in &range {
            let c = b.dot(&v);
            v -= b.scale(c);
        }
        let n = v.norm();
        if n <= 1e-12 {
            return Err(Error::Invalid(
                "Re tau columns are numerically dependent".into(),
            ));
        }
        range.push(v.unscale(n));
    }
    let mut null: Vec<RVector> = Vec::with_capacity(r - d);
    for i in 0..r {
        if null.len() == r - d {
            break;
        }
        let mut v = RVector::zeros(r);
        v[i] = 1.0;
        for b in range.iter().chain(null.iter()) {
            let c = b.dot(&v);
            v -= b.scale(c);
        }
        let n = v.norm();
        if n > 1e-8 {
            null.push(v.unscale(n));
        }
    }
    if null.len() != r - d {
        return Err(Error::Invalid(
            "failed to build a null-space basis for (Re tau)ᵀ".into(),
        ));
    }
    Ok(null)
}

struct BarrierProblem {
    r: usize,
    d: usize,
    sigma: CMatrix,
    sqrt_sigma: CMatrix,
    g: RMatrix,
    k_p: RMatrix,
    null_basis: Vec<RVector>,
}

impl BarrierProblem {
    fn nvars_v(&self) -> usize {
        self.d * (self.d + 1) / 2
    }

    fn nvars(&self) -> usize {
        self.nvars_v() + self.null_basis.len() * self.d
    }

    fn v_of(&self, x: &[f64]) -> RMatrix {
        let d = self.d;
        let mut v = RMatrix::zeros(d, d);
        let mut a = 0;
        for i in 0..d {
            for j in i..d {
                v[(i, j)] = x[a];
                v[(j, i)] = x[a];
                a += 1;
            }
        }
        v
    }

    fn k_of(&self, x: &[f64]) -> RMatrix {
        let mut k = self.k_p.clone();
        let base = self.nvars_v();
        for (p, nvec) in self.null_basis.iter().enumerate() {
            for q in 0..self.d {
                let coeff = x[base + p * self.d + q];
                for i in 0..self.r {
                    k[(i, q)] += coeff * nvec[i];
                }
            }
        }
        k
    }

    /// Assemble the block matrix `M = [[V, KᵀΣ^{1/2}], [Σ^{1/2}K, I]]`.
    fn block(&self, x: &[f64]) -> CMatrix {
        let d = self.d;
        let r = self.r;
        let v = self.v_of(x);
        let k = self.k_of(x).map(|t| c64(t, 0.0));
        let top_right = k.adjoint() * &self.sqrt_sigma;
        let mut m = CMatrix::zeros(d + r, d + r);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = c64(v[(i, j)], 0.0);
            }
        }
        for i in 0..d {
            for j in 0..r {
                m[(i, d + j)] = top_right[(i, j)];
                m[(d + j, i)] = top_right[(i, j)].conj();
            }
        }
        for j in 0..r {
            m[(d + j, d + j)] = c64(1.0, 0.0);
        }
        m
    }

    /// Partial derivative of `M` in variable `a` (constant in `x`).
    fn block_derivative(&self, a: usize) -> CMatrix {
        let d = self.d;
        let r = self.r;
        let mut m = CMatrix::zeros(d + r, d + r);
        if a < self.nvars_v() {
            let mut idx = 0;
            for i in 0..d {
                for j in i..d {
                    if idx == a {
                        m[(i, j)] += c64(1.0, 0.0);
                        m[(j, i)] = m[(i, j)];
                        return m;
                    }
                    idx += 1;
                }
            }
            unreachable!();
        }
        let a = a - self.nvars_v();
        let p = a / d;
        let q = a % d;
        let nvec = &self.null_basis[p];
        // dK has column q = nvec; top-right gets dKᵀ Σ^{1/2}.
        for j in 0..r {
            let mut entry = c64(0.0, 0.0);
            for i in 0..r {
                entry += self.sqrt_sigma[(i, j)].scale(nvec[i]);
            }
            m[(q, d + j)] = entry;
            m[(d + j, q)] = entry.conj();
        }
        m
    }

    fn linear_cost(&self, a: usize) -> f64 {
        if a >= self.nvars_v() {
            return 0.0;
        }
        let mut idx = 0;
        for i in 0..self.d {
            for j in i..self.d {
                if idx == a {
                    return if i == j {
                        self.g[(i, i)]
                    } else {
                        2.0 * self.g[(i, j)]
                    };
                }
                idx += 1;
            }
        }
        unreachable!()
    }

    fn initial_point(&self) -> Vec<f64> {
        let kc = self.k_p.map(|t| c64(t, 0.0));
        let z0 = kc.adjoint() * &self.sigma * &kc;
        let re_z0 = re_part(&z0);
        let im_norm = im_part(&z0).norm();
        let shift = im_norm + 1.0;
        let mut x = vec![0.0; self.nvars()];
        let mut a = 0;
        for i in 0..self.d {
            for j in i..self.d {
                x[a] = re_z0[(i, j)] + if i == j { shift } else { 0.0 };
                a += 1;
            }
        }
        x
    }

    fn logdet_and_inverse(&self, m: &CMatrix) -> Option<(f64, CMatrix)> {
        let chol = m.clone().cholesky()?;
        let l = chol.l();
        let mut logdet = 0.0;
        for i in 0..l.nrows() {
            let diag = l[(i, i)].re;
            if diag <= 0.0 {
                return None;
            }
            logdet += diag.ln();
        }
        Some((2.0 * logdet, chol.inverse()))
    }

    fn solve(&self, opts: &BarrierOptions) -> Result<(Vec<f64>, usize, f64)> {
        let nvars = self.nvars();
        let barrier_dim = (self.d + self.r) as f64;
        let mut x = self.initial_point();
        let mut total_iters = 0usize;
        let mut mu = opts.mu0;

        let derivs: Vec<CMatrix> = (0..nvars).map(|a| self.block_derivative(a)).collect();
        let costs: Vec<f64> = (0..nvars).map(|a| self.linear_cost(a)).collect();

        loop {
            // Damped Newton on f(x) = Tr(GV) - mu log det M(x).
            for _ in 0..80 {
                if total_iters >= opts.max_total_newton {
                    return Err(Error::NoConvergence {
                        context: "barrier step cap exceeded",
                        iterations: total_iters,
                        gap: mu * barrier_dim,
                    });
                }
                let m = self.block(&x);
                let (_, m_inv) = self.logdet_and_inverse(&m).ok_or(Error::NoConvergence {
                    context: "barrier iterate left the cone",
                    iterations: total_iters,
                    gap: mu * barrier_dim,
                })?;

                // gradient and Hessian of the barrier subproblem
                let products: Vec<CMatrix> = derivs.iter().map(|p| &m_inv * p).collect();
                let mut grad = RVector::zeros(nvars);
                for a in 0..nvars {
                    let tr: f64 = (0..products[a].nrows())
                        .map(|i| products[a][(i, i)].re)
                        .sum();
                    grad[a] = costs[a] - mu * tr;
                }
                let mut hess = RMatrix::zeros(nvars, nvars);
                for a in 0..nvars {
                    for b in a..nvars {
                        let tr: f64 = (&products[a] * &products[b])
                            .diagonal()
                            .iter()
                            .map(|z| z.re)
                            .sum();
                        hess[(a, b)] = mu * tr;
                        hess[(b, a)] = hess[(a, b)];
                    }
                }
                // Ridge for numerical safety.
                let ridge = 1e-12 * hess.trace().abs().max(1e-12);
                for a in 0..nvars {
                    hess[(a, a)] += ridge;
                }

                let step = match hess.clone().cholesky() {
                    Some(ch) => ch.solve(&grad).scale(-1.0),
                    None => grad.scale(-1.0 / grad.norm().max(1.0)),
                };
                let decrement = -grad.dot(&step);
                total_iters += 1;
                if decrement.abs() < 1e-13 {
                    break;
                }

                // Backtracking line search keeping the iterate in the cone.
                let f0 = self.barrier_value(&x, mu).ok_or(Error::NoConvergence {
                    context: "barrier value undefined at current iterate",
                    iterations: total_iters,
                    gap: mu * barrier_dim,
                })?;
                let mut t = 1.0;
                let mut accepted = false;
                for _ in 0..60 {
                    let cand: Vec<f64> = x
                        .iter()
                        .zip(step.iter())
                        .map(|(xi, si)| xi + t * si)
                        .collect();
                    if let Some(fc) = self.barrier_value(&cand, mu) {
                        if fc <= f0 - 0.25 * t * decrement {
                            x = cand;
                            accepted = true;
                            break;
                        }
                    }
                    t *= 0.5;
                }
                if !accepted {
                    break;
                }
                if decrement < 1e-11 {
                    break;
                }
            }

            if mu * barrier_dim < opts.gap_tol {
                return Ok((x, total_iters, mu * barrier_dim));
            }
            mu *= opts.shrink;
        }
    }

    fn barrier_value(&self, x: &[f64], mu: f64) -> Option<f64> {
        let m = self.block(x);
        let (logdet, _) = self.logdet_and_inverse(&m)?;
        let v = self.v_of(x);
        Some((&self.g * v).trace() - mu * logdet)
    }
}

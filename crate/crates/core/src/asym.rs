//! Finite-`n` convergence diagnostics.
//!
//! All i.i.d./product quantities factorize over sites, so they are evaluated
//! as sums of per-site logarithms (the per-factor principal logarithm is
//! accumulated without reducing the running total modulo 2π). Block counts up
//! to `10^6` never materialize a tensor product; only [`qlan_residual`]
//! builds small tensor powers, capped at total dimension 1024.

use std::sync::Arc;

use crate::dext::{build_d_extension, DExtension};
use crate::gauss::{self, GaussianShiftSpec};
use crate::linalg::{
    c64, kron, matrix_function, re_part, CMatrix, HermitianMatrix, KernelPolicy, MatrixFunction,
    RMatrix, RVector, C64,
};
use crate::model::{
    fisher_from_slds, sld, sqrt_likelihood_ratio, state_at, DensityMatrix, Model, ProductNonIid,
    Pure1d,
};
use crate::quad::gauss_hermite;
use crate::{tol, Error, Result};

/// A family of product states with per-site score observables, scaled by
/// `1/√n`: identical sites for i.i.d. models, a convergent site sequence for
/// the non-i.i.d. product family.
pub struct SiteFamily {
    theta0: Vec<f64>,
    kind: FamilyKind,
    limit_sigma: CMatrix,
    f: RMatrix,
}

enum FamilyKind {
    Iid {
        model: Option<Arc<dyn Model>>,
        state: DensityMatrix,
        obs: Vec<HermitianMatrix>,
    },
    Product {
        family: Arc<ProductNonIid>,
        /// Extension directions of the limit model beyond the per-site SLDs,
        /// recentred per site when evaluated.
        ext_dirs: Vec<HermitianMatrix>,
    },
}

fn check_zero_mean(state: &DensityMatrix, obs: &[HermitianMatrix]) -> Result<()> {
    for x in obs {
        let mean = state.expect_herm(x);
        if mean.abs() > tol::ZERO_MEAN {
            return Err(Error::ResidualTooLarge {
                residual: mean.abs(),
                tol: tol::ZERO_MEAN,
                context: "site observable is not zero-mean under its site state",
            });
        }
    }
    Ok(())
}

impl SiteFamily {
    /// Identical sites with fixed state and zero-mean observables. Such a
    /// family carries no parameter, so only zero-shift diagnostics apply.
    pub fn iid(state: DensityMatrix, obs: Vec<HermitianMatrix>) -> Result<Self> {
        check_zero_mean(&state, &obs)?;
        let geo_sigma = sigma_of(&state, &obs);
        let r = obs.len();
        Ok(Self {
            theta0: vec![],
            kind: FamilyKind::Iid {
                model: None,
                state,
                obs,
            },
            limit_sigma: geo_sigma,
            f: RMatrix::identity(r, r),
        })
    }

    /// I.i.d. family of a single-system model at `theta0`, carrying the
    /// greedy invariant extension of its SLD span as observables.
    pub fn from_model(model: Arc<dyn Model>, theta0: &[f64]) -> Result<Self> {
        let rho = state_at(model.as_ref(), theta0)?;
        let slds = sld(model.as_ref(), theta0)?;
        let ext = build_d_extension(&rho, &slds)?;
        Self::from_model_with_extension(model, theta0, &ext)
    }

    /// I.i.d. family with caller-supplied extension observables.
    pub fn from_model_with_extension(
        model: Arc<dyn Model>,
        theta0: &[f64],
        ext: &DExtension,
    ) -> Result<Self> {
        let rho = state_at(model.as_ref(), theta0)?;
        check_zero_mean(&rho, &ext.observables)?;
        Ok(Self {
            theta0: theta0.to_vec(),
            kind: FamilyKind::Iid {
                model: Some(model),
                state: rho,
                obs: ext.observables.clone(),
            },
            limit_sigma: ext.sigma.clone(),
            f: ext.f.clone(),
        })
    }

    /// The non-i.i.d. product family at `theta0`: site `k` carries its own
    /// SLDs plus the limit model's extension directions recentred by the site
    /// mean.
    pub fn from_product(family: Arc<ProductNonIid>, theta0: &[f64]) -> Result<Self> {
        let limit = family.limit();
        let rho_inf = state_at(&limit, theta0)?;
        let slds_inf = sld(&limit, theta0)?;
        let ext = build_d_extension(&rho_inf, &slds_inf)?;
        let d = slds_inf.len();
        let ext_dirs = ext.observables[d..].to_vec();
        Ok(Self {
            theta0: theta0.to_vec(),
            kind: FamilyKind::Product { family, ext_dirs },
            limit_sigma: ext.sigma.clone(),
            f: ext.f.clone(),
        })
    }

    pub fn num_observables(&self) -> usize {
        self.limit_sigma.nrows()
    }

    pub fn param_dim(&self) -> usize {
        self.theta0.len()
    }

    /// Limit covariance `Σ_{ij} = Tr σ A_j A_i` of the scaled sums.
    pub fn limit_sigma(&self) -> &CMatrix {
        &self.limit_sigma
    }

    /// The limiting Gaussian shift family `N((Re τ)h, Σ)` with `τ = ΣF`.
    pub fn limit_spec(&self) -> Result<GaussianShiftSpec> {
        GaussianShiftSpec::from_sigma_f(self.limit_sigma.clone(), self.f.clone())
    }

    fn sites_identical(&self) -> bool {
        matches!(self.kind, FamilyKind::Iid { .. })
    }

    /// State and observables of site `k` (1-based) at parameter `theta`.
    fn site(&self, k: u64, theta: &[f64]) -> Result<(DensityMatrix, Vec<HermitianMatrix>)> {
        match &self.kind {
            FamilyKind::Iid { model, state, obs } => {
                if theta == self.theta0.as_slice() || theta.is_empty() {
                    Ok((state.clone(), obs.clone()))
                } else {
                    let m = model.as_ref().ok_or_else(|| {
                        Error::Invalid(
                            "this site family carries no model, so shifted states are unavailable"
                                .into(),
                        )
                    })?;
                    Ok((state_at(m.as_ref(), theta)?, obs.clone()))
                }
            }
            FamilyKind::Product { family, ext_dirs } => {
                let site_model = family.site(k as usize);
                let state = state_at(&site_model, theta)?;
                let state0 = state_at(&site_model, &self.theta0)?;
                let mut obs = sld(&site_model, &self.theta0)?;
                for dir in ext_dirs {
                    let mean = state0.expect_herm(dir);
                    obs.push(dir.add_scaled(&HermitianMatrix::identity(dir.dim()), -mean)?);
                }
                check_zero_mean(&state0, &obs)?;
                Ok((state, obs))
            }
        }
    }

    /// Log-domain product of per-site factors `z_k` for `k = 1..=n`.
    /// Identical sites collapse to `n · log z_1`.
    fn log_product(&self, n: u64, mut factor: impl FnMut(u64) -> Result<C64>) -> Result<C64> {
        if self.sites_identical() {
            let z = factor(1)?;
            let ln = complex_ln(z);
            return Ok((ln.scale(n as f64)).exp());
        }
        let mut total = c64(0.0, 0.0);
        for k in 1..=n {
            total += complex_ln(factor(k)?);
        }
        Ok(total.exp())
    }
}

fn complex_ln(z: C64) -> C64 {
    c64(z.norm().max(f64::MIN_POSITIVE).ln(), z.im.atan2(z.re))
}

/// `Σ_{ij} = Tr(ρ X_j X_i)` without quotient bookkeeping (the observables are
/// already representatives).
fn sigma_of(state: &DensityMatrix, obs: &[HermitianMatrix]) -> CMatrix {
    let r = obs.len();
    CMatrix::from_fn(r, r, |i, j| {
        state.expect(&(obs[j].matrix() * obs[i].matrix()))
    })
}

/// `exp(i c Σ_i w_i A_i)` via the eigendecomposition of the Hermitian combo.
fn weyl_factor(obs: &[HermitianMatrix], w: &[f64], c: f64) -> Result<CMatrix> {
    let dim = obs[0].dim();
    let mut m = CMatrix::zeros(dim, dim);
    for (x, &wi) in obs.iter().zip(w) {
        m += x.matrix().scale(wi);
    }
    let h = HermitianMatrix::symmetrize(m)?;
    let eig = h.eig();
    let d = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, c * l)));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

fn check_freq(fam: &SiteFamily, w: &[f64]) -> Result<()> {
    if w.len() != fam.num_observables() {
        return Err(Error::DimensionMismatch {
            context: "frequency vector length",
            expected: fam.num_observables(),
            got: w.len(),
        });
    }
    Ok(())
}

/// Both sides of the sandwich condition at block count `n`.
#[derive(Debug, Clone, Copy)]
pub struct SandwichValue {
    pub lhs: C64,
    pub rhs: C64,
    pub gap: f64,
}

/// Factorized evaluation of
/// `Π_k Tr √σ^(k) e^{iξ·A/√n} √σ^(k) e^{iη·A/√n}` against its Gaussian
/// target `exp(-½ (ξ,η)ᵀ [[Σ, Σ#Σᵀ], [Σ#Σᵀ, Σᵀ]] (ξ,η))`.
pub fn sandwich_value(fam: &SiteFamily, xi: &[f64], eta: &[f64], n: u64) -> Result<SandwichValue> {
    check_freq(fam, xi)?;
    check_freq(fam, eta)?;
    if n == 0 {
        return Err(Error::Invalid("block count must be at least 1".into()));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let theta0 = fam.theta0.clone();
    let lhs = fam.log_product(n, |k| {
        let (state, obs) = fam.site(k, &theta0)?;
        let eig = state.eig();
        let sqrt_state = eig.map_eigenvalues(|x| x.max(0.0).sqrt());
        let w_xi = weyl_factor(&obs, xi, scale)?;
        let w_eta = weyl_factor(&obs, eta, scale)?;
        Ok((&sqrt_state * w_xi * &sqrt_state * w_eta).trace())
    })?;

    let sigma = fam.limit_sigma();
    let sharp = crate::linalg::sigma_sharp_sigma_t(sigma)?;
    let v = re_part(sigma);
    let xv = RVector::from_column_slice(xi);
    let ev = RVector::from_column_slice(eta);
    let q = xv.dot(&(&v * &xv)) + 2.0 * xv.dot(&(&sharp * &ev)) + ev.dot(&(&v * &ev));
    let rhs = c64((-0.5 * q).exp(), 0.0);
    Ok(SandwichValue {
        lhs,
        rhs,
        gap: (lhs - rhs).norm(),
    })
}

/// Finite-`n` quasi-characteristic value under the locally shifted state
/// against the limit family's quasi-characteristic function.
#[derive(Debug, Clone, Copy)]
pub struct QuasiCharComparison {
    pub finite_n: C64,
    pub limit: C64,
    pub gap: f64,
}

/// `Π_k Tr σ^{(k)}_{θ0 + h/√n} Π_t e^{iξ_t·A^{(k)}/√n}` against the limit
/// quasi-characteristic function of `N((Re τ)h, Σ)`.
pub fn quasi_char_finite_n(
    fam: &SiteFamily,
    h: &[f64],
    xis: &[Vec<f64>],
    n: u64,
) -> Result<QuasiCharComparison> {
    if xis.is_empty() {
        return Err(Error::Invalid("need at least one frequency vector".into()));
    }
    for xi in xis {
        check_freq(fam, xi)?;
    }
    if n == 0 {
        return Err(Error::Invalid("block count must be at least 1".into()));
    }
    if h.len() != fam.param_dim() && !(h.is_empty() && fam.param_dim() == 0) {
        return Err(Error::DimensionMismatch {
            context: "shift vector length",
            expected: fam.param_dim(),
            got: h.len(),
        });
    }
    let scale = 1.0 / (n as f64).sqrt();
    let theta_n: Vec<f64> = fam
        .theta0
        .iter()
        .zip(h)
        .map(|(t, hi)| t + hi * scale)
        .collect();
    let finite_n = fam.log_product(n, |k| {
        let (state, obs) = fam.site(k, &theta_n)?;
        let dim = state.dim();
        let mut prod = CMatrix::identity(dim, dim);
        for xi in xis {
            prod *= weyl_factor(&obs, xi, scale)?;
        }
        Ok((state.matrix() * prod).trace())
    })?;

    let spec = fam.limit_spec()?;
    let limit = gauss::quasi_char_function(&spec, h, xis)?;
    Ok(QuasiCharComparison {
        finite_n,
        limit,
        gap: (finite_n - limit).norm(),
    })
}

/// Finite-`n` Weyl commutation residual
/// `2 - 2 Re{ e^{iξᵀSη} · Π_k Tr σ^(k) W(-η) W(-ξ) W(ξ+η) }`, the squared
/// Hilbert–Schmidt distance between `W(ξ)W(η)√ρ` and `e^{iξᵀSη}W(ξ+η)√ρ`.
pub fn weyl_residual(fam: &SiteFamily, xi: &[f64], eta: &[f64], n: u64) -> Result<f64> {
    check_freq(fam, xi)?;
    check_freq(fam, eta)?;
    if n == 0 {
        return Err(Error::Invalid("block count must be at least 1".into()));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let neg = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| -x).collect() };
    let sum: Vec<f64> = xi.iter().zip(eta).map(|(a, b)| a + b).collect();
    let theta0 = fam.theta0.clone();
    let z = fam.log_product(n, |k| {
        let (state, obs) = fam.site(k, &theta0)?;
        let w1 = weyl_factor(&obs, &neg(eta), scale)?;
        let w2 = weyl_factor(&obs, &neg(xi), scale)?;
        let w3 = weyl_factor(&obs, &sum, scale)?;
        Ok((state.matrix() * w1 * w2 * w3).trace())
    })?;
    let s = crate::linalg::im_part(fam.limit_sigma());
    let xv = RVector::from_column_slice(xi);
    let ev = RVector::from_column_slice(eta);
    let phase = C64::from_polar(1.0, xv.dot(&(&s * &ev)));
    Ok(2.0 - 2.0 * (phase * z).re)
}

/// Report of the local expansion diagnostic of [`qlan_residual`].
#[derive(Debug, Clone, Copy)]
pub struct QlanReport {
    /// Weighted norm of `log R² - (h·Δ - ½ hᵀJh · I)` on the support.
    pub residual: f64,
    /// `Tr σ⊥` of the block-state decomposition.
    pub singular_mass: f64,
    /// Weighted norm of the drift term `h·Δ`.
    pub drift_norm: f64,
    /// The quadratic correction `½ hᵀ J h`.
    pub quadratic_term: f64,
}

/// Local expansion residual of the square-root likelihood ratio on the
/// `n`-fold product: materializes `ρ^{⊗n}` and the shifted product state,
/// computes `R` by the quantum Lebesgue decomposition, and measures
/// `‖ log R² - (h^i Δ_i - ½ h^i h^j J_{ij} I) ‖` in the `L²(ρ^{⊗n})` norm on
/// the support of `ρ^{⊗n}`. Total dimension is capped at 1024.
pub fn qlan_residual(m: &dyn Model, theta0: &[f64], h: &[f64], n: u32) -> Result<QlanReport> {
    if n == 0 {
        return Err(Error::Invalid("block count must be at least 1".into()));
    }
    let rho1 = state_at(m, theta0)?;
    let dim = rho1.dim();
    let total_dim = (dim as f64).powi(n as i32);
    if !(1.0..=1024.0).contains(&total_dim) {
        return Err(Error::Invalid(format!(
            "total dimension {dim}^{n} exceeds the 1024 cap"
        )));
    }
    let n_us = n as usize;
    let scale = 1.0 / (n as f64).sqrt();
    let theta_n: Vec<f64> = theta0.iter().zip(h).map(|(t, hi)| t + hi * scale).collect();
    if !m.contains(&theta_n) {
        return Err(Error::OutsideDomain { theta: theta_n });
    }
    let sigma1 = state_at(m, &theta_n)?;

    let rho_n = rho1.kron_power(n_us);
    let sigma_n = sigma1.kron_power(n_us);

    let slds = sld(m, theta0)?;
    let fisher = fisher_from_slds(&rho1, &slds);
    let d = slds.len();
    if h.len() != d {
        return Err(Error::DimensionMismatch {
            context: "shift vector length",
            expected: d,
            got: h.len(),
        });
    }

    // Δ_i = (1/√n) Σ_k I ⊗ … ⊗ L_i ⊗ … ⊗ I
    let total = rho_n.dim();
    let mut drift = CMatrix::zeros(total, total);
    for (i, l) in slds.iter().enumerate() {
        if h[i] == 0.0 {
            continue;
        }
        for k in 0..n_us {
            let mut factor = if k == 0 {
                l.matrix().clone()
            } else {
                CMatrix::identity(dim, dim)
            };
            for pos in 1..n_us {
                let next = if pos == k {
                    l.matrix().clone()
                } else {
                    CMatrix::identity(dim, dim)
                };
                factor = kron(&factor, &next);
            }
            drift += factor.scale(h[i] * scale);
        }
    }
    let drift = HermitianMatrix::symmetrize(drift)?;

    let lr = sqrt_likelihood_ratio(&rho_n, &sigma_n)?;
    let log_r = matrix_function(&lr.r, MatrixFunction::Log, KernelPolicy::Default)?;
    let log_r2 = log_r.matrix().scale(2.0);

    let hv = RVector::from_column_slice(h);
    let quadratic_term = 0.5 * hv.dot(&(&fisher * &hv));
    let expansion = drift.matrix() - CMatrix::identity(total, total).scale(quadratic_term);
    let e_raw = log_r2 - expansion;

    let eig = rho_n.eig();
    let p = eig.support_projector(eig.default_cutoff());
    let e_supp = HermitianMatrix::symmetrize(&p * e_raw * &p)?;

    let weighted_norm = |a: &HermitianMatrix| -> f64 {
        (rho_n.expect(&(a.matrix() * a.matrix())).re)
            .max(0.0)
            .sqrt()
    };
    Ok(QlanReport {
        residual: weighted_norm(&e_supp),
        singular_mass: lr.singular_mass,
        drift_norm: weighted_norm(&drift),
        quadratic_term,
    })
}

/// One row of the limiting-measurement demonstration table.
#[derive(Debug, Clone, Copy)]
pub struct PovmDemoRow {
    pub h: f64,
    /// `(Tr ρ_{h/√n} ρ_0)^n`.
    pub finite_n_prob: f64,
    /// `e^{-h²/4}`.
    pub limit_prob: f64,
    /// Quadrature value of `∫ √2 e^{-x²/2} p_h(x) dx`.
    pub m_quadrature: f64,
    /// `|m_quadrature - limit_prob|`.
    pub m_check_gap: f64,
    /// `max_x √2 e^{-x²/2} = √2`, exceeding the effect bound 1.
    pub m_max: f64,
}

/// Demonstration that the binary measurement family on the one-dimensional
/// pure model has a limiting distribution but no limiting measurement: its
/// would-be density `m(x) = √2 e^{-x²/2}` exceeds 1, even though it
/// reproduces `e^{-h²/4}` against every shifted Gaussian.
pub fn no_limit_povm_demo(h_values: &[f64], n: u64) -> Result<Vec<PovmDemoRow>> {
    if n == 0 {
        return Err(Error::Invalid("block count must be at least 1".into()));
    }
    let model = Pure1d;
    let (nodes, weights) = gauss_hermite(64);
    let scale = 1.0 / (n as f64).sqrt();
    h_values
        .iter()
        .map(|&h| {
            let rho_shift = state_at(&model, &[h * scale])?;
            // Tr ρ_{h/√n} ρ_0 is the (0,0) entry of the shifted state.
            let t = rho_shift.matrix()[(0, 0)].re;
            let finite_n_prob = (n as f64 * t.max(f64::MIN_POSITIVE).ln()).exp();
            let limit_prob = (-h * h / 4.0).exp();
            // ∫ √2 e^{-x²/2} p_h(x) dx with p_h the N(h,1) density, written
            // as ∫ e^{-x²} u(x) dx for Gauss–Hermite quadrature.
            let u = |x: f64| -> f64 {
                2f64.sqrt() / (2.0 * std::f64::consts::PI).sqrt() * (h * x - h * h / 2.0).exp()
            };
            let quad: f64 = nodes.iter().zip(&weights).map(|(&x, &w)| w * u(x)).sum();
            Ok(PovmDemoRow {
                h,
                finite_n_prob,
                limit_prob,
                m_quadrature: quad,
                m_check_gap: (quad - limit_prob).abs(),
                m_max: 2f64.sqrt(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complexify;
    use crate::model::builtin::pauli;
    use crate::model::{AffineModel, BlochBall};

    fn bloch_origin_family() -> SiteFamily {
        SiteFamily::from_model(Arc::new(BlochBall), &[0.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn sandwich_trivial_at_zero_frequencies() {
        let fam = bloch_origin_family();
        let out = sandwich_value(&fam, &[0.0; 3], &[0.0; 3], 100).unwrap();
        assert!((out.lhs - c64(1.0, 0.0)).norm() < 1e-12);
        assert!((out.rhs - c64(1.0, 0.0)).norm() < 1e-12);
        assert!(out.gap < 1e-12);
    }

    #[test]
    fn sandwich_bloch_origin_converges() {
        let fam = bloch_origin_family();
        let xi = [0.6, -0.64, 0.48];
        let eta = [0.0, 0.6, 0.8];
        let g2 = sandwich_value(&fam, &xi, &eta, 100).unwrap().gap;
        let g4 = sandwich_value(&fam, &xi, &eta, 10_000).unwrap().gap;
        let g6 = sandwich_value(&fam, &xi, &eta, 1_000_000).unwrap().gap;
        assert!(g6 < 1e-3, "gap at 1e6: {g6}");
        assert!(g4 <= 1.5 * g2 && g6 <= 1.5 * g4, "gaps {g2} {g4} {g6}");
    }

    #[test]
    fn sandwich_classical_family_matches_sigma() {
        // all observables diagonal: Σ#Σᵀ = Σ and the gap shrinks with n
        let state = DensityMatrix::new(complexify(&RMatrix::from_diagonal(&RVector::from_vec(
            vec![0.6, 0.4],
        ))))
        .unwrap();
        let z = pauli(2);
        let mean = state.expect_herm(&z);
        let obs = vec![z.add_scaled(&HermitianMatrix::identity(2), -mean).unwrap()];
        let fam = SiteFamily::iid(state, obs).unwrap();
        let sharp = crate::linalg::sigma_sharp_sigma_t(fam.limit_sigma()).unwrap();
        assert!(
            (complexify(&sharp) - fam.limit_sigma())
                .map(|z| z.norm())
                .max()
                < 1e-10
        );
        let mut prev = f64::INFINITY;
        for n in [100u64, 10_000, 1_000_000] {
            let g = sandwich_value(&fam, &[0.7], &[-0.3], n).unwrap().gap;
            assert!(g <= 1.5 * prev, "gap {g} after {prev}");
            prev = g;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn sandwich_pure_state_family_converges() {
        // rank-deficient sites exercise the kernel policies along the trend
        let fam = SiteFamily::from_model(Arc::new(crate::model::Pure1d), &[0.0]).unwrap();
        let r = fam.num_observables();
        assert_eq!(r, 2, "pure qubit family closes to two directions");
        let xi = vec![0.8, -0.3];
        let eta = vec![0.2, 0.5];
        let mut prev = f64::INFINITY;
        for n in [100u64, 10_000, 1_000_000] {
            let g = sandwich_value(&fam, &xi, &eta, n).unwrap().gap;
            assert!(g <= 1.5 * prev, "gap {g} after {prev}");
            prev = g;
        }
        assert!(prev < 1e-3, "gap at 10^6: {prev}");
    }

    #[test]
    fn quasi_char_single_site_definition() {
        let fam = bloch_origin_family();
        let xi = vec![0.3, -0.2, 0.5];
        let out = quasi_char_finite_n(&fam, &[0.0; 3], std::slice::from_ref(&xi), 1).unwrap();
        // n = 1, h = 0: the factorized value is the single-site trace.
        let state = state_at(&BlochBall, &[0.0, 0.0, 0.0]).unwrap();
        let w = weyl_factor(&[pauli(0), pauli(1), pauli(2)], &xi, 1.0).unwrap();
        let direct = (state.matrix() * w).trace();
        assert!((out.finite_n - direct).norm() < 1e-12);
    }

    #[test]
    fn quasi_char_zero_frequencies_is_unit() {
        let fam = bloch_origin_family();
        let out =
            quasi_char_finite_n(&fam, &[0.5, 0.0, 0.0], &[vec![0.0; 3], vec![0.0; 3]], 64).unwrap();
        assert!((out.finite_n - c64(1.0, 0.0)).norm() < 1e-12);
        assert!((out.limit - c64(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn quasi_char_bloch_shift_converges_to_gaussian() {
        let fam = bloch_origin_family();
        let h = [1.0, 0.0, 0.0];
        let xi = vec![1.0, 0.0, 0.0];
        let out = quasi_char_finite_n(&fam, &h, std::slice::from_ref(&xi), 1_000_000).unwrap();
        // limit model N(h, I): value e^{i·1 - 1/2}
        let expected = c64(0.0, 1.0).exp() * c64((-0.5f64).exp(), 0.0);
        assert!((out.limit - expected).norm() < 1e-12);
        assert!(out.gap < 1e-3, "gap {}", out.gap);

        let g2 = quasi_char_finite_n(&fam, &h, std::slice::from_ref(&xi), 100)
            .unwrap()
            .gap;
        let g4 = quasi_char_finite_n(&fam, &h, std::slice::from_ref(&xi), 10_000)
            .unwrap()
            .gap;
        assert!(
            g4 <= 1.5 * g2 && out.gap <= 1.5 * g4,
            "gaps {g2} {g4} {}",
            out.gap
        );
    }

    #[test]
    fn quasi_char_multi_factor_matches_formula_sign() {
        // Ordered two-factor finite-n value must approach the limit formula,
        // pinning the sign convention of the cross term.
        let rho0 = complexify(&RMatrix::from_diagonal(&RVector::from_vec(vec![0.8, 0.2])));
        let b = pauli(0).matrix().scale(0.5);
        let m = Arc::new(AffineModel::new(rho0, vec![b]).unwrap());
        let fam = SiteFamily::from_model(m, &[0.0]).unwrap();
        let r = fam.num_observables();
        assert_eq!(r, 2, "biased qubit closes to two directions");
        let xi = vec![0.9, -0.4];
        let eta = vec![0.2, 0.7];
        let out = quasi_char_finite_n(&fam, &[0.3], &[xi, eta], 1_000_000).unwrap();
        assert!(out.gap < 5e-3, "gap {}", out.gap);
    }

    #[test]
    fn weyl_residual_zero_frequency_is_exact_zero() {
        let fam = bloch_origin_family();
        let r = weyl_residual(&fam, &[0.0; 3], &[0.4, 0.0, -0.3], 50).unwrap();
        assert!(r.abs() < 1e-12, "residual {r}");
    }

    #[test]
    fn weyl_residual_commuting_family_vanishes() {
        let state = DensityMatrix::new(complexify(&RMatrix::from_diagonal(&RVector::from_vec(
            vec![0.7, 0.3],
        ))))
        .unwrap();
        let z = pauli(2);
        let mean = state.expect_herm(&z);
        let obs = vec![z.add_scaled(&HermitianMatrix::identity(2), -mean).unwrap()];
        let fam = SiteFamily::iid(state, obs).unwrap();
        for n in [1u64, 10, 1000] {
            let r = weyl_residual(&fam, &[0.8], &[-0.5], n).unwrap();
            assert!(r.abs() < 1e-12, "n {n} residual {r}");
        }
    }

    #[test]
    fn weyl_residual_decreases_for_noncommuting_pair() {
        let state = DensityMatrix::new(CMatrix::identity(2, 2).scale(0.5)).unwrap();
        let fam = SiteFamily::iid(state, vec![pauli(0), pauli(1)]).unwrap();
        let r2 = weyl_residual(&fam, &[1.0, 0.0], &[0.0, 1.0], 100).unwrap();
        let r4 = weyl_residual(&fam, &[1.0, 0.0], &[0.0, 1.0], 10_000).unwrap();
        let r6 = weyl_residual(&fam, &[1.0, 0.0], &[0.0, 1.0], 1_000_000).unwrap();
        assert!(r4 < r2 && r6 < 1e-3, "residuals {r2} {r4} {r6}");
        assert!(r2 >= -1e-10 && r4 >= -1e-10 && r6 >= -1e-10);
    }

    #[test]
    fn product_family_site_observables_are_recentred() {
        let fam =
            SiteFamily::from_product(Arc::new(ProductNonIid::default()), &[0.1, 0.0, 0.2]).unwrap();
        let (state, obs) = fam.site(3, &[0.1, 0.0, 0.2]).unwrap();
        for x in &obs {
            assert!(state.expect_herm(x).abs() < 1e-9);
        }
    }

    #[test]
    fn product_family_quasi_char_converges() {
        let fam = SiteFamily::from_product(Arc::new(ProductNonIid::default()), &[0.0; 3]).unwrap();
        let h = [0.5, 0.0, 0.0];
        let xi = vec![1.0, 0.0, 0.0];
        let g3 = quasi_char_finite_n(&fam, &h, std::slice::from_ref(&xi), 1000)
            .unwrap()
            .gap;
        let g4 = quasi_char_finite_n(&fam, &h, std::slice::from_ref(&xi), 10_000)
            .unwrap()
            .gap;
        assert!(g4 < g3, "gaps {g3} {g4}");
        assert!(g4 < 1e-2);
    }

    #[test]
    fn identical_site_products_collapse_to_powers() {
        // the forced per-site loop agrees with the n-th power fast path
        let state = DensityMatrix::new(CMatrix::identity(2, 2).scale(0.5)).unwrap();
        let n = 1000u64;
        let scale = 1.0 / (n as f64).sqrt();
        let factor = || -> C64 {
            let w = weyl_factor(&[pauli(0), pauli(1)], &[0.4, -0.7], scale).unwrap();
            (state.matrix() * w).trace()
        };
        let z = factor();
        let fast = (complex_ln(z).scale(n as f64)).exp();
        let mut slow_log = c64(0.0, 0.0);
        for _ in 0..n {
            slow_log += complex_ln(factor());
        }
        let slow = slow_log.exp();
        assert!(
            (fast - slow).norm() <= 1e-12 * n as f64 * fast.norm().max(1.0),
            "fast {fast} slow {slow}"
        );
    }

    #[test]
    fn qlan_residual_zero_shift_vanishes() {
        let report = qlan_residual(&BlochBall, &[0.1, 0.0, 0.0], &[0.0; 3], 4).unwrap();
        assert!(report.residual < 1e-8, "residual {}", report.residual);
        assert!(report.singular_mass < 1e-8);
    }

    #[test]
    fn qlan_residual_decreases_with_n() {
        let h = [0.5, 0.0, 0.0];
        let r1 = qlan_residual(&BlochBall, &[0.1, 0.0, 0.0], &h, 1).unwrap();
        let r8 = qlan_residual(&BlochBall, &[0.1, 0.0, 0.0], &h, 8).unwrap();
        assert!(
            r8.residual < r1.residual,
            "residuals n=1 {} n=8 {}",
            r1.residual,
            r8.residual
        );
        assert!(r8.singular_mass <= 1e-8);
    }

    #[test]
    fn qlan_residual_caps_dimension() {
        assert!(qlan_residual(&BlochBall, &[0.0; 3], &[0.1, 0.0, 0.0], 11).is_err());
    }

    #[test]
    fn qlan_matches_classical_product_computation() {
        // Diagonal model: everything commutes and the residual reduces to the
        // classical local expansion over the 2^n outcome probabilities.
        let p0 = 0.6;
        let rho0 = complexify(&RMatrix::from_diagonal(&RVector::from_vec(vec![
            p0,
            1.0 - p0,
        ])));
        let b = complexify(&RMatrix::from_diagonal(&RVector::from_vec(vec![1.0, -1.0])));
        let m = AffineModel::new(rho0, vec![b]).unwrap();
        let theta0 = [0.0];
        let h = [0.5];
        let n = 8u32;
        let report = qlan_residual(&m, &theta0, &h, n).unwrap();

        // classical oracle over bitstrings
        let scale = 1.0 / (n as f64).sqrt();
        let p = [p0, 1.0 - p0];
        let q = [p0 + h[0] * scale, 1.0 - p0 - h[0] * scale];
        let score = [1.0 / p0, -1.0 / (1.0 - p0)];
        let fisher: f64 = p[0] * score[0] * score[0] + p[1] * score[1] * score[1];
        let mut second_moment = 0.0;
        for bits in 0..(1u32 << n) {
            let mut prob = 1.0;
            let mut llr = 0.0;
            let mut delta = 0.0;
            for site in 0..n {
                let b = ((bits >> site) & 1) as usize;
                prob *= p[b];
                llr += (q[b] / p[b]).ln();
                delta += score[b] * scale;
            }
            let e = llr - (h[0] * delta - 0.5 * h[0] * h[0] * fisher);
            second_moment += prob * e * e;
        }
        let classical = second_moment.sqrt();
        assert!(
            (report.residual - classical).abs() <= 1e-10,
            "quantum {} classical {classical}",
            report.residual
        );
    }

    #[test]
    fn povm_demo_rows() {
        let rows = no_limit_povm_demo(&[0.0, 1.0], 1_000_000).unwrap();
        assert!((rows[0].finite_n_prob - 1.0).abs() < 1e-12);
        assert!((rows[0].limit_prob - 1.0).abs() < 1e-15);
        let r1 = rows[1];
        assert!((r1.finite_n_prob - (-0.25f64).exp()).abs() < 1e-4);
        assert!(r1.m_check_gap < 1e-8, "quadrature gap {}", r1.m_check_gap);
        assert!(r1.m_max > 1.0);
    }

    #[test]
    fn povm_demo_error_decays_like_inverse_n() {
        let h = 1.0;
        let mut bound_c = 0.0f64;
        for n in [1_000u64, 10_000, 100_000, 1_000_000] {
            let row = no_limit_povm_demo(&[h], n).unwrap()[0];
            let err = (row.finite_n_prob - row.limit_prob).abs();
            bound_c = bound_c.max(err * n as f64);
        }
        // |finite - limit| <= C / n across the sweep with one fitted C
        for n in [1_000u64, 10_000, 100_000, 1_000_000] {
            let row = no_limit_povm_demo(&[h], n).unwrap()[0];
            let err = (row.finite_n_prob - row.limit_prob).abs();
            assert!(
                err <= 1.0001 * bound_c / n as f64 + 1e-15,
                "n {n} err {err}"
            );
        }
    }

    #[test]
    fn iid_family_without_model_rejects_shifts() {
        let state = DensityMatrix::new(CMatrix::identity(2, 2).scale(0.5)).unwrap();
        let fam = SiteFamily::iid(state, vec![pauli(0)]).unwrap();
        assert!(quasi_char_finite_n(&fam, &[0.5], &[vec![0.2]], 10).is_err());
    }
}

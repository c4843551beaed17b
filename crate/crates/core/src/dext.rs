//! Commutation-operator analysis of spans of observables: invariance tests,
//! greedy construction of invariant extensions of the SLD span, and assembly
//! of the Gaussian data `(Σ, A, τ, F)` of the limiting shift family.
//!
//! Quotient arithmetic modulo the kernel ideal
//! `K_ρ = {K : Kρ = ρK = 0}` is realized concretely by zeroing the
//! kernel×kernel block in the eigenbasis of ρ; the inner product used for
//! projections is the symmetrized `⟨A,B⟩ = Re Tr ρ (A∘B)` with
//! `A∘B = (AB + BA)/2`.

use crate::gauss::GaussianShiftSpec;
use crate::linalg::{
    c64, re_part, real_sym_eig, sigma_sharp_sigma_t, CMatrix, HermEig, HermitianMatrix, RMatrix,
};
use crate::model::DensityMatrix;
use crate::{tol, Error, Result};

/// An invariant extension of a list of score observables, with the Gaussian
/// data of the limit family.
///
/// Invariants maintained by [`build_d_extension`]:
/// * each `X_i` is zero-mean: `|Tr ρ X_i| ≤ 1e-10`;
/// * `Σ_{ij} = Tr(ρ X_j X_i)` is PSD Hermitian with `Re Σ ≻ 0`;
/// * `A_{ij} = Tr(√ρ X_j √ρ X_i)` is real symmetric with `A ⪯ Σ#Σᵀ`;
/// * `τ = ΣF` exactly as stored.
#[derive(Debug, Clone)]
pub struct DExtension {
    pub observables: Vec<HermitianMatrix>,
    pub f: RMatrix,
    pub sigma: CMatrix,
    pub a: RMatrix,
    pub tau: CMatrix,
}

impl DExtension {
    pub fn r(&self) -> usize {
        self.observables.len()
    }

    pub fn d(&self) -> usize {
        self.f.ncols()
    }

    /// The Gaussian shift family `N((Re τ)h, Σ)` carried by this extension.
    pub fn gaussian_spec(&self) -> Result<GaussianShiftSpec> {
        GaussianShiftSpec::new(self.sigma.clone(), self.tau.clone(), self.f.clone())
    }

    /// Re-express the extension through an invertible real change of basis
    /// `X'_i = Σ_j C_{ij} X_j` (the scores stay expressible, the bound must
    /// not move). Used to exercise well-definedness of the bound.
    pub fn transform(&self, c: &RMatrix) -> Result<DExtension> {
        let r = self.r();
        if c.nrows() != r || c.ncols() != r {
            return Err(Error::DimensionMismatch {
                context: "extension transform",
                expected: r,
                got: c.nrows(),
            });
        }
        let c_inv = c
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Invalid("extension transform must be invertible".into()))?;
        let dim = self.observables[0].dim();
        let mut observables = Vec::with_capacity(r);
        for i in 0..r {
            let mut m = CMatrix::zeros(dim, dim);
            for j in 0..r {
                m += self.observables[j].matrix().scale(c[(i, j)]);
            }
            observables.push(HermitianMatrix::symmetrize(m)?);
        }
        let cc = c.map(|x| c64(x, 0.0));
        let sigma = &cc * &self.sigma * cc.adjoint();
        let f = c_inv.transpose() * &self.f;
        // tau is maintained as Sigma F, never carried independently
        let tau = &sigma * f.map(|x| c64(x, 0.0));
        let a = c * &self.a * c.transpose();
        Ok(DExtension {
            observables,
            f,
            sigma,
            a,
            tau,
        })
    }

    pub fn validate(&self, rho: &DensityMatrix) -> Result<()> {
        let geo = QuotientGeometry::new(rho);
        for x in &self.observables {
            let mean = rho.expect_herm(x);
            if mean.abs() > tol::ZERO_MEAN {
                return Err(Error::ResidualTooLarge {
                    residual: mean.abs(),
                    tol: tol::ZERO_MEAN,
                    context: "extension observable is not zero-mean",
                });
            }
        }
        let sigma_check = geo.sigma_matrix(&self.observables);
        let sigma_gap = crate::linalg::max_abs_diff(&sigma_check, &self.sigma);
        if sigma_gap > 1e-10 {
            return Err(Error::ResidualTooLarge {
                residual: sigma_gap,
                tol: 1e-10,
                context: "stored Sigma disagrees with Tr(rho X_j X_i)",
            });
        }
        let (re_ev, _) = real_sym_eig(&re_part(&self.sigma))?;
        if re_ev[0] <= tol::GRAM_MIN_EIG {
            return Err(Error::NotPsd {
                min_eigenvalue: re_ev[0],
            });
        }
        let tau_gap =
            crate::linalg::max_abs_diff(&self.tau, &(&self.sigma * self.f.map(|x| c64(x, 0.0))));
        if tau_gap > 0.0 {
            return Err(Error::ResidualTooLarge {
                residual: tau_gap,
                tol: 0.0,
                context: "tau must equal Sigma F exactly as stored",
            });
        }
        let sharp = sigma_sharp_sigma_t(&self.sigma)?;
        let (gap_ev, _) = real_sym_eig(&(sharp - &self.a))?;
        if gap_ev[0] < -tol::DEXT {
            return Err(Error::ResidualTooLarge {
                residual: -gap_ev[0],
                tol: tol::DEXT,
                context: "A exceeds Sigma # Sigma^T",
            });
        }
        Ok(())
    }
}

/// Quotient-space arithmetic in the eigenbasis of ρ.
pub(crate) struct QuotientGeometry {
    eig: HermEig,
    cutoff: f64,
}

impl QuotientGeometry {
    pub fn new(rho: &DensityMatrix) -> Self {
        let eig = rho.eig();
        let cutoff = eig.default_cutoff().max(f64::MIN_POSITIVE);
        Self { eig, cutoff }
    }

    fn kernel(&self, j: usize) -> bool {
        self.eig.eigenvalues[j] < self.cutoff
    }

    /// Representative of `x` modulo the kernel ideal, in the eigenbasis.
    pub fn rep(&self, x: &HermitianMatrix) -> CMatrix {
        let u = &self.eig.eigenvectors;
        let mut m = u.adjoint() * x.matrix() * u;
        let n = m.nrows();
        for j in 0..n {
            for k in 0..n {
                if self.kernel(j) && self.kernel(k) {
                    m[(j, k)] = c64(0.0, 0.0);
                }
            }
        }
        m
    }

    /// Back to the original basis.
    pub fn unrep(&self, m: &CMatrix) -> Result<HermitianMatrix> {
        let u = &self.eig.eigenvectors;
        HermitianMatrix::symmetrize(u * m * u.adjoint())
    }

    /// `Re Tr ρ (a∘b)` with ρ diagonal in this basis.
    pub fn inner(&self, a: &CMatrix, b: &CMatrix) -> f64 {
        let ab = a * b;
        let ba = b * a;
        let mut s = c64(0.0, 0.0);
        for j in 0..ab.nrows() {
            s += (ab[(j, j)] + ba[(j, j)]).scale(0.5 * self.eig.eigenvalues[j].max(0.0));
        }
        s.re
    }

    pub fn norm(&self, a: &CMatrix) -> f64 {
        self.inner(a, a).max(0.0).sqrt()
    }

    /// Commutation operator in the eigenbasis:
    /// `Y_{jk} = i (λ_j - λ_k)/(λ_j + λ_k) X_{jk}`, kernel pairs zeroed.
    pub fn commutation(&self, x: &CMatrix) -> CMatrix {
        let n = x.nrows();
        let mut y = CMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                let lj = self.eig.eigenvalues[j].max(0.0);
                let lk = self.eig.eigenvalues[k].max(0.0);
                if lj + lk >= self.cutoff {
                    y[(j, k)] = c64(0.0, (lj - lk) / (lj + lk)) * x[(j, k)];
                }
            }
        }
        y
    }

    /// `Σ_{ij} = Tr(ρ X_j X_i)` for observables given in the original basis.
    pub fn sigma_matrix(&self, xs: &[HermitianMatrix]) -> CMatrix {
        let reps: Vec<CMatrix> = xs.iter().map(|x| self.rep(x)).collect();
        self.sigma_of_reps(&reps)
    }

    fn sigma_of_reps(&self, reps: &[CMatrix]) -> CMatrix {
        let r = reps.len();
        CMatrix::from_fn(r, r, |i, j| {
            let prod = &reps[j] * &reps[i];
            let mut s = c64(0.0, 0.0);
            for a in 0..prod.nrows() {
                s += prod[(a, a)].scale(self.eig.eigenvalues[a].max(0.0));
            }
            s
        })
    }

    /// `A_{ij} = Tr(√ρ X_j √ρ X_i)` (real symmetric).
    fn a_matrix_of_reps(&self, reps: &[CMatrix]) -> RMatrix {
        let r = reps.len();
        let sq: Vec<f64> = self
            .eig
            .eigenvalues
            .iter()
            .map(|&x| x.max(0.0).sqrt())
            .collect();
        RMatrix::from_fn(r, r, |i, j| {
            let mut s = c64(0.0, 0.0);
            let n = reps[i].nrows();
            for a in 0..n {
                for b in 0..n {
                    s += reps[j][(a, b)] * reps[i][(b, a)].scale(sq[a] * sq[b]);
                }
            }
            s.re
        })
    }

    /// Gram–Schmidt in the quotient inner product; fails on degeneracy.
    fn orthonormalize(&self, reps: &[CMatrix]) -> Result<Vec<CMatrix>> {
        let mut q: Vec<CMatrix> = Vec::with_capacity(reps.len());
        for rep in reps {
            let mut v = rep.clone();
            for existing in &q {
                let coeff = self.inner(existing, &v);
                v -= existing.scale(coeff);
            }
            let n = self.norm(&v);
            if n <= tol::GRAM_MIN_EIG.sqrt() {
                return Err(Error::GramDegenerate {
                    min_eigenvalue: n * n,
                });
            }
            q.push(v.unscale(n));
        }
        Ok(q)
    }

    fn project_residual(&self, q: &[CMatrix], v: &CMatrix) -> CMatrix {
        let mut r = v.clone();
        for basis in q {
            let coeff = self.inner(basis, &r);
            r -= basis.scale(coeff);
        }
        r
    }
}

/// Apply Holevo's commutation operator: the minimal-norm Hermitian `Y`
/// solving `ρY + Yρ = i(ρX - Xρ)`.
pub fn commutation_apply(rho: &DensityMatrix, x: &HermitianMatrix) -> Result<HermitianMatrix> {
    if rho.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            context: "commutation operator",
            expected: rho.dim(),
            got: x.dim(),
        });
    }
    let geo = QuotientGeometry::new(rho);
    let y = geo.commutation(&geo.rep(x));
    geo.unrep(&y)
}

/// Report of [`check_d_invariance`].
#[derive(Debug, Clone)]
pub struct DInvarianceReport {
    pub invariant: bool,
    /// Projection residual norm of `D_ρ X_i` onto the span, one per observable.
    pub residuals: Vec<f64>,
    /// `max |A - Σ#Σᵀ|` entrywise.
    pub condition_i_gap: f64,
    /// Smallest eigenvalue of the quotient Gram matrix.
    pub gram_min_eig: f64,
}

impl DInvarianceReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Test whether the span of `xs` is invariant under the commutation operator
/// of ρ, reporting both the projection residuals of `D_ρ X_i` and the gap
/// `‖A - Σ#Σᵀ‖_max` (the two characterizations must agree).
pub fn check_d_invariance(
    rho: &DensityMatrix,
    xs: &[HermitianMatrix],
    tol_inv: f64,
) -> Result<DInvarianceReport> {
    if xs.is_empty() {
        return Err(Error::Invalid("need at least one observable".into()));
    }
    let geo = QuotientGeometry::new(rho);
    let reps: Vec<CMatrix> = xs.iter().map(|x| geo.rep(x)).collect();

    let r = reps.len();
    let gram = RMatrix::from_fn(r, r, |i, j| geo.inner(&reps[i], &reps[j]));
    let (gram_ev, _) = real_sym_eig(&gram)?;
    let gram_min_eig = gram_ev[0];
    if gram_min_eig <= tol::GRAM_MIN_EIG {
        return Err(Error::GramDegenerate {
            min_eigenvalue: gram_min_eig,
        });
    }

    let q = geo.orthonormalize(&reps)?;
    let residuals: Vec<f64> = reps
        .iter()
        .map(|x| geo.norm(&geo.project_residual(&q, &geo.commutation(x))))
        .collect();

    let sigma = geo.sigma_of_reps(&reps);
    let a = geo.a_matrix_of_reps(&reps);
    let sharp = sigma_sharp_sigma_t(&sigma)?;
    let condition_i_gap = (a - sharp).abs().max();

    let invariant = residuals.iter().all(|&x| x < tol_inv) && condition_i_gap < tol_inv;
    Ok(DInvarianceReport {
        invariant,
        residuals,
        condition_i_gap,
        gram_min_eig,
    })
}

/// Greedy closure of the span of the SLDs under the commutation operator.
///
/// The scores are recentred to zero mean, then directions `D_ρ X` with a
/// projection residual above tolerance are appended (orthonormalized) until
/// the span closes, capped at `dim² - 1` basis elements. The first `d`
/// elements reproduce the recentred scores exactly, so `F = [I_d; 0]`.
pub fn build_d_extension(rho: &DensityMatrix, slds: &[HermitianMatrix]) -> Result<DExtension> {
    if slds.is_empty() {
        return Err(Error::Invalid("need at least one score observable".into()));
    }
    let d = slds.len();
    let dim = rho.dim();
    let geo = QuotientGeometry::new(rho);

    // Recentre and take quotient representatives.
    let mut basis: Vec<CMatrix> = Vec::with_capacity(d);
    for l in slds {
        let mean = rho.expect_herm(l);
        let centred = l.add_scaled(&HermitianMatrix::identity(dim), -mean)?;
        basis.push(geo.rep(&centred));
    }
    let mut q = geo.orthonormalize(&basis)?;

    let cap = dim * dim - 1;
    let mut idx = 0;
    while idx < basis.len() {
        let dx = geo.commutation(&basis[idx]);
        let resid = geo.project_residual(&q, &dx);
        let nr = geo.norm(&resid);
        if nr > tol::DEXT {
            if basis.len() >= cap {
                return Err(Error::NoConvergence {
                    context: "invariant extension exceeded the dim^2 - 1 cap (tolerance misconfiguration)",
                    iterations: basis.len(),
                    gap: nr,
                });
            }
            let newdir = resid.unscale(nr);
            basis.push(newdir.clone());
            q.push(newdir);
        }
        idx += 1;
    }

    let r = basis.len();
    let observables: Vec<HermitianMatrix> = basis
        .iter()
        .map(|b| geo.unrep(b))
        .collect::<Result<Vec<_>>>()?;
    let sigma = geo.sigma_of_reps(&basis);
    let a = geo.a_matrix_of_reps(&basis);
    let mut f = RMatrix::zeros(r, d);
    for i in 0..d {
        f[(i, i)] = 1.0;
    }
    let tau = &sigma * f.map(|x| c64(x, 0.0));

    let ext = DExtension {
        observables,
        f,
        sigma,
        a,
        tau,
    };
    ext.validate(rho)?;
    Ok(ext)
}

/// Evaluate both sides of the sandwich condition at finite block count `n`
/// over a grid of `(ξ, η)` pairs, returning the maximum gap.
///
/// `sigma` must be consistent with `(ρ, X_list)`; the left side is delegated
/// to the factorized evaluation in [`crate::asym`].
pub fn verify_condition_2_7(
    rho: &DensityMatrix,
    xs: &[HermitianMatrix],
    sigma: &CMatrix,
    grid: &[(Vec<f64>, Vec<f64>)],
    n: u64,
) -> Result<f64> {
    let geo = QuotientGeometry::new(rho);
    let sigma_check = geo.sigma_matrix(xs);
    let gap = crate::linalg::max_abs_diff(&sigma_check, sigma);
    if gap > 1e-8 {
        return Err(Error::Invalid(format!(
            "Sigma is inconsistent with (rho, X_list): max gap {gap:.3e}"
        )));
    }
    let fam = crate::asym::SiteFamily::iid(rho.clone(), xs.to_vec())?;
    let mut max_gap = 0.0f64;
    for (xi, eta) in grid {
        let out = crate::asym::sandwich_value(&fam, xi, eta, n)?;
        max_gap = max_gap.max(out.gap);
    }
    Ok(max_gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{approx_eq, complexify, RVector};
    use crate::model::builtin::pauli;
    use crate::model::{sld, state_at, BlochBall};
    use crate::testutil::Rng;

    fn diag_state(p: f64) -> DensityMatrix {
        DensityMatrix::new(complexify(&RMatrix::from_diagonal(&RVector::from_vec(
            vec![p, 1.0 - p],
        ))))
        .unwrap()
    }

    #[test]
    fn commutation_on_maximally_mixed_is_zero() {
        let rho = diag_state(0.5);
        let y = commutation_apply(&rho, &pauli(0)).unwrap();
        assert!(crate::linalg::max_abs(y.matrix()) < 1e-14);
    }

    #[test]
    fn commutation_qubit_closed_form() {
        // rho = diag(p, 1-p), X = sigma_x  =>  (1-2p) sigma_y
        let p = 0.8;
        let rho = diag_state(p);
        let y = commutation_apply(&rho, &pauli(0)).unwrap();
        let expected = pauli(1).matrix().scale(1.0 - 2.0 * p);
        assert!(approx_eq(y.matrix(), &expected, 1e-12));
    }

    #[test]
    fn commutation_vanishes_on_commuting_observable() {
        let rho = diag_state(0.3);
        let y = commutation_apply(&rho, &pauli(2)).unwrap();
        assert!(crate::linalg::max_abs(y.matrix()) < 1e-14);
    }

    /// Vectorized superoperator oracle: solve (L_rho + R_rho) Y = i[rho, X]
    /// as a dim^2 linear system and take the minimal-norm solution.
    fn commutation_oracle(rho: &DensityMatrix, x: &HermitianMatrix) -> CMatrix {
        let dim = rho.dim();
        let n2 = dim * dim;
        let id = CMatrix::identity(dim, dim);
        let super_op = rho.matrix().transpose().kronecker(&id) + id.kronecker(rho.matrix());
        let rhs_mat = times_i(&(rho.matrix() * x.matrix() - x.matrix() * rho.matrix()));
        // column-major vectorization
        let mut rhs = CMatrix::zeros(n2, 1);
        for c in 0..dim {
            for r in 0..dim {
                rhs[(c * dim + r, 0)] = rhs_mat[(r, c)];
            }
        }
        let h = HermitianMatrix::symmetrize(super_op).unwrap();
        let eig = h.eig();
        let cutoff = eig.default_cutoff().max(f64::MIN_POSITIVE);
        // pseudo-inverse apply
        let ut_rhs = eig.eigenvectors.adjoint() * rhs;
        let mut sol = CMatrix::zeros(n2, 1);
        for k in 0..n2 {
            if eig.eigenvalues[k] >= cutoff {
                sol[(k, 0)] = ut_rhs[(k, 0)].unscale(eig.eigenvalues[k]);
            }
        }
        let sol = &eig.eigenvectors * sol;
        let mut y = CMatrix::zeros(dim, dim);
        for c in 0..dim {
            for r in 0..dim {
                y[(r, c)] = sol[(c * dim + r, 0)];
            }
        }
        y
    }

    #[test]
    fn commutation_matches_superoperator_oracle() {
        let mut rng = Rng::seed_from_u64(41);
        for _ in 0..60 {
            let dim = 2 + rng.next_index(2);
            let rho = crate::testutil::rand_density(&mut rng, dim);
            let x = crate::testutil::rand_herm(&mut rng, dim);
            let y = commutation_apply(&rho, &x).unwrap();
            let oracle = commutation_oracle(&rho, &x);
            let gap = crate::linalg::max_abs_diff(y.matrix(), &oracle);
            assert!(gap <= 1e-10, "oracle gap {gap}");
        }
    }

    #[test]
    fn bloch_origin_pauli_span_is_invariant() {
        let rho = state_at(&BlochBall, &[0.0, 0.0, 0.0]).unwrap();
        let xs = vec![pauli(0), pauli(1), pauli(2)];
        let rep = check_d_invariance(&rho, &xs, tol::DEXT).unwrap();
        assert!(rep.invariant, "report {rep:?}");
        assert!(rep.condition_i_gap < tol::DEXT);
    }

    #[test]
    fn sigma_x_alone_is_not_invariant_for_biased_state() {
        let rho = diag_state(0.8);
        let rep = check_d_invariance(&rho, &[pauli(0)], tol::DEXT).unwrap();
        assert!(!rep.invariant);
        assert!(rep.max_residual() > 1e-3);

        let rep2 = check_d_invariance(&rho, &[pauli(0), pauli(1)], tol::DEXT).unwrap();
        assert!(rep2.invariant, "report {rep2:?}");
    }

    #[test]
    fn gram_degeneracy_is_rejected() {
        let rho = diag_state(0.5);
        let xs = vec![pauli(0), pauli(0)];
        assert!(matches!(
            check_d_invariance(&rho, &xs, tol::DEXT),
            Err(Error::GramDegenerate { .. })
        ));
    }

    #[test]
    fn build_extension_bloch_origin() {
        let rho = state_at(&BlochBall, &[0.0, 0.0, 0.0]).unwrap();
        let slds = sld(&BlochBall, &[0.0, 0.0, 0.0]).unwrap();
        let ext = build_d_extension(&rho, &slds).unwrap();
        assert_eq!(ext.r(), 3);
        assert!(approx_eq(&ext.sigma, &CMatrix::identity(3, 3), 1e-12));
        assert!((ext.f.clone() - RMatrix::identity(3, 3)).abs().max() < 1e-14);
        for i in 0..3 {
            assert!(approx_eq(
                ext.observables[i].matrix(),
                pauli(i).matrix(),
                1e-12
            ));
        }
    }

    #[test]
    fn build_extension_closes_sigma_x() {
        let rho = diag_state(0.8);
        let ext = build_d_extension(&rho, &[pauli(0)]).unwrap();
        assert_eq!(ext.r(), 2, "D closure adds the sigma_y direction");
        // second basis vector proportional to sigma_y
        let second = ext.observables[1].matrix();
        let overlap = (second * pauli(1).matrix()).trace().re.abs();
        let norm = (second * second).trace().re.sqrt() * 2f64.sqrt();
        assert!(
            (overlap - norm).abs() < 1e-9,
            "overlap {overlap} norm {norm}"
        );
    }

    #[test]
    fn build_extension_maximally_mixed_adds_nothing() {
        let rho = diag_state(0.5);
        let ext = build_d_extension(&rho, &[pauli(0)]).unwrap();
        assert_eq!(ext.r(), 1);
    }

    #[test]
    fn build_extension_is_idempotent() {
        let rho = diag_state(0.8);
        let ext = build_d_extension(&rho, &[pauli(0)]).unwrap();
        let again = build_d_extension(&rho, &ext.observables).unwrap();
        assert_eq!(again.r(), ext.r());
    }

    #[test]
    fn invariance_gap_equivalence_random_draws() {
        // Lemma-style equivalence: projection residuals vanish iff A = Σ#Σᵀ.
        let mut rng = Rng::seed_from_u64(77);
        let mut invariant_count = 0;
        for trial in 0..200 {
            let dim = 2 + (trial % 2);
            let rho = crate::testutil::rand_density(&mut rng, dim);
            let (xs, _) = random_span(&mut rng, &rho, dim);
            let rep = match check_d_invariance(&rho, &xs, tol::DEXT) {
                Ok(rep) => rep,
                Err(Error::GramDegenerate { .. }) => continue,
                Err(e) => panic!("unexpected {e}"),
            };
            let by_residual = rep.max_residual() < tol::DEXT;
            let by_gap = rep.condition_i_gap < tol::DEXT;
            assert_eq!(by_residual, by_gap, "trial {trial}: {rep:?}");
            if rep.invariant {
                invariant_count += 1;
            }
        }
        assert!(
            invariant_count > 20,
            "want a mix, got {invariant_count} invariant"
        );
    }

    /// Either a random (generically non-invariant) span or a closed span.
    fn random_span(rng: &mut Rng, rho: &DensityMatrix, dim: usize) -> (Vec<HermitianMatrix>, bool) {
        if rng.uniform() < 0.5 {
            let k = 1 + rng.next_index(2);
            let xs = (0..k)
                .map(|_| {
                    let x = crate::testutil::rand_herm(rng, dim);
                    let mean = rho.expect_herm(&x);
                    x.add_scaled(&HermitianMatrix::identity(dim), -mean)
                        .unwrap()
                })
                .collect();
            (xs, false)
        } else {
            let x = crate::testutil::rand_herm(rng, dim);
            let mean = rho.expect_herm(&x);
            let x = x
                .add_scaled(&HermitianMatrix::identity(dim), -mean)
                .unwrap();
            match build_d_extension(rho, &[x]) {
                Ok(ext) => (ext.observables, true),
                Err(_) => (vec![pauli(0)], false),
            }
        }
    }

    #[test]
    fn lemma_a_dominated_by_sharp() {
        // A ⪯ Σ#Σᵀ on random draws, with equality exactly on invariant spans.
        let mut rng = Rng::seed_from_u64(99);
        for trial in 0..200 {
            let dim = 2 + (trial % 2);
            let rho = crate::testutil::rand_density(&mut rng, dim);
            let (xs, _) = random_span(&mut rng, &rho, dim);
            let geo = QuotientGeometry::new(&rho);
            let reps: Vec<CMatrix> = xs.iter().map(|x| geo.rep(x)).collect();
            let sigma = geo.sigma_of_reps(&reps);
            if real_sym_eig(&re_part(&sigma)).unwrap().0[0] < 1e-6 {
                continue; // nearly degenerate draw
            }
            let a = geo.a_matrix_of_reps(&reps);
            let sharp = sigma_sharp_sigma_t(&sigma).unwrap();
            let (ev, _) = real_sym_eig(&(sharp - a)).unwrap();
            assert!(ev[0] >= -1e-8, "trial {trial}: min eig {}", ev[0]);
        }
    }

    #[test]
    fn condition_sandwich_verification() {
        // trivial grid point: both sides are 1
        let rho = state_at(&BlochBall, &[0.0, 0.0, 0.0]).unwrap();
        let slds = sld(&BlochBall, &[0.0, 0.0, 0.0]).unwrap();
        let ext = build_d_extension(&rho, &slds).unwrap();
        let zero = (vec![0.0; 3], vec![0.0; 3]);
        let gap = verify_condition_2_7(&rho, &ext.observables, &ext.sigma, &[zero], 10).unwrap();
        assert!(gap < 1e-12);

        // unit-ball grid at n = 10^6
        let grid = vec![
            (vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]),
            (vec![0.6, -0.64, 0.48], vec![0.0, 0.6, 0.8]),
            (vec![0.5, 0.5, 0.5], vec![-0.5, 0.5, 0.0]),
        ];
        let gap =
            verify_condition_2_7(&rho, &ext.observables, &ext.sigma, &grid, 1_000_000).unwrap();
        assert!(gap < 1e-3, "gap {gap}");

        // inconsistent Sigma is rejected
        let wrong = &ext.sigma + CMatrix::identity(3, 3).scale(0.1);
        assert!(verify_condition_2_7(&rho, &ext.observables, &wrong, &grid, 10).is_err());
    }

    #[test]
    fn condition_sandwich_commuting_case() {
        // all-diagonal observables: the left side is an exact Gaussian in the
        // limit with Sigma # Sigma^T = Sigma
        let rho = diag_state(0.7);
        let z = pauli(2);
        let mean = rho.expect_herm(&z);
        let x = z.add_scaled(&HermitianMatrix::identity(2), -mean).unwrap();
        let ext = build_d_extension(&rho, &[x]).unwrap();
        assert_eq!(ext.r(), 1);
        let sharp = sigma_sharp_sigma_t(&ext.sigma).unwrap();
        assert!(crate::linalg::max_abs_diff(&complexify(&sharp), &ext.sigma) < 1e-12);
        let grid = vec![(vec![0.8], vec![-0.5])];
        let g1 = verify_condition_2_7(&rho, &ext.observables, &ext.sigma, &grid, 100).unwrap();
        let g2 =
            verify_condition_2_7(&rho, &ext.observables, &ext.sigma, &grid, 1_000_000).unwrap();
        assert!(g2 < g1 && g2 < 1e-4, "gaps {g1} {g2}");
    }

    #[test]
    fn extension_exposes_gaussian_spec() {
        let rho = diag_state(0.8);
        let ext = build_d_extension(&rho, &[pauli(0)]).unwrap();
        let spec = ext.gaussian_spec().unwrap();
        assert_eq!(spec.r(), 2);
        assert_eq!(spec.d(), 1);
        let one = crate::gauss::char_function(&spec, &[0.0], &[0.0, 0.0]).unwrap();
        assert!((one - c64(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn transform_keeps_sigma_consistent() {
        let rho = diag_state(0.8);
        let ext = build_d_extension(&rho, &[pauli(0)]).unwrap();
        let mut rng = Rng::seed_from_u64(5);
        let mut c = crate::testutil::rand_real(&mut rng, 2, 2);
        c += RMatrix::identity(2, 2).scale(2.0);
        let t = ext.transform(&c).unwrap();
        let geo = QuotientGeometry::new(&rho);
        let sigma_direct = geo.sigma_matrix(&t.observables);
        assert!(approx_eq(&sigma_direct, &t.sigma, 1e-10));
        // scores still expressible: F'ᵀ X' = original first observable
        let dim = 2;
        let mut back = CMatrix::zeros(dim, dim);
        for j in 0..t.r() {
            back += t.observables[j].matrix().scale(t.f[(j, 0)]);
        }
        assert!(approx_eq(&back, ext.observables[0].matrix(), 1e-10));
    }

    fn times_i(m: &CMatrix) -> CMatrix {
        m.map(|z| c64(-z.im, z.re))
    }
}

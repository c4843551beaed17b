//! Built-in models: the one-dimensional pure family, the spin coherent-state
//! family, the Bloch ball, a contracted Bloch family used as a site sequence,
//! and user-defined affine models.

use crate::linalg::{c64, trace, CMatrix, HermitianMatrix};
use crate::model::Model;
use crate::{tol, Error, Result};

/// Pauli matrix σ_{i+1} for `i ∈ {0, 1, 2}` (x, y, z).
pub fn pauli(i: usize) -> HermitianMatrix {
    let m = match i {
        0 => CMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(1., 0.), c64(1., 0.), c64(0., 0.)]),
        1 => CMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(0., -1.), c64(0., 1.), c64(0., 0.)]),
        2 => CMatrix::from_row_slice(2, 2, &[c64(1., 0.), c64(0., 0.), c64(0., 0.), c64(-1., 0.)]),
        _ => panic!("pauli index must be 0, 1, or 2"),
    };
    HermitianMatrix::new(m).expect("pauli matrices are Hermitian")
}

/// State `½ (I + b·σ)` for a Bloch vector `b`.
pub fn bloch_state(b: [f64; 3]) -> CMatrix {
    let mut m = CMatrix::identity(2, 2);
    for (i, &bi) in b.iter().enumerate() {
        m += pauli(i).matrix().scale(bi);
    }
    m.scale(0.5)
}

/// One-dimensional pure-state family
/// `ρ_θ = (2 / (e^θ + e^{-θ})) e^{θσ_x/2} ρ_0 e^{θσ_x/2}` with `ρ_0 = |0⟩⟨0|`,
/// equivalently the Bloch vector `(tanh θ, 0, sech θ)`.
#[derive(Debug, Clone, Copy)]
pub struct Pure1d;

impl Model for Pure1d {
    fn name(&self) -> &str {
        "pure_1d"
    }
    fn hilbert_dim(&self) -> usize {
        2
    }
    fn param_dim(&self) -> usize {
        1
    }
    fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == 1 && theta[0].is_finite()
    }
    fn state_unchecked(&self, theta: &[f64]) -> CMatrix {
        let t = theta[0];
        bloch_state([t.tanh(), 0.0, 1.0 / t.cosh()])
    }
    fn analytic_derivative(&self, theta: &[f64], _i: usize) -> Option<HermitianMatrix> {
        let t = theta[0];
        let sech = 1.0 / t.cosh();
        let d = pauli(0).matrix().scale(sech * sech) + pauli(2).matrix().scale(-sech * t.tanh());
        Some(HermitianMatrix::symmetrize(d.scale(0.5)).expect("square"))
    }
}

/// Spin coherent-state family
/// `ρ_θ = ½ (I + θ¹σ_1 + θ²σ_2 + sqrt(1 - (θ¹)² - (θ²)²) σ_3)` on the open
/// unit disk.
#[derive(Debug, Clone, Copy)]
pub struct SpinCoherent;

impl Model for SpinCoherent {
    fn name(&self) -> &str {
        "spin_coherent"
    }
    fn hilbert_dim(&self) -> usize {
        2
    }
    fn param_dim(&self) -> usize {
        2
    }
    fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == 2 && theta[0] * theta[0] + theta[1] * theta[1] < 1.0
    }
    fn state_unchecked(&self, theta: &[f64]) -> CMatrix {
        let r2 = theta[0] * theta[0] + theta[1] * theta[1];
        bloch_state([theta[0], theta[1], (1.0 - r2).sqrt()])
    }
    fn analytic_derivative(&self, theta: &[f64], i: usize) -> Option<HermitianMatrix> {
        let r2 = theta[0] * theta[0] + theta[1] * theta[1];
        let z = (1.0 - r2).sqrt();
        let d = pauli(i).matrix() + pauli(2).matrix().scale(-theta[i] / z);
        Some(HermitianMatrix::symmetrize(d.scale(0.5)).expect("square"))
    }
}

/// Full qubit family `ρ_θ = ½ (I + θ·σ)` on the open unit ball.
#[derive(Debug, Clone, Copy)]
pub struct BlochBall;

impl Model for BlochBall {
    fn name(&self) -> &str {
        "bloch_ball"
    }
    fn hilbert_dim(&self) -> usize {
        2
    }
    fn param_dim(&self) -> usize {
        3
    }
    fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == 3 && theta.iter().map(|x| x * x).sum::<f64>() < 1.0
    }
    fn state_unchecked(&self, theta: &[f64]) -> CMatrix {
        bloch_state([theta[0], theta[1], theta[2]])
    }
    fn analytic_derivative(&self, _theta: &[f64], i: usize) -> Option<HermitianMatrix> {
        Some(HermitianMatrix::symmetrize(pauli(i).matrix().scale(0.5)).expect("square"))
    }
}

/// Contracted Bloch family `ρ_θ = ½ (I + γ θ·σ)`, used as the per-site model
/// of the non-i.i.d. product family.
#[derive(Debug, Clone, Copy)]
pub struct ScaledBloch {
    pub gamma: f64,
}

impl Model for ScaledBloch {
    fn name(&self) -> &str {
        "scaled_bloch"
    }
    fn hilbert_dim(&self) -> usize {
        2
    }
    fn param_dim(&self) -> usize {
        3
    }
    fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == 3 && theta.iter().map(|x| x * x).sum::<f64>() < 1.0
    }
    fn state_unchecked(&self, theta: &[f64]) -> CMatrix {
        bloch_state([
            self.gamma * theta[0],
            self.gamma * theta[1],
            self.gamma * theta[2],
        ])
    }
    fn analytic_derivative(&self, _theta: &[f64], i: usize) -> Option<HermitianMatrix> {
        Some(
            HermitianMatrix::symmetrize(pauli(i).matrix().scale(0.5 * self.gamma)).expect("square"),
        )
    }
}

/// Non-i.i.d. product family: site `k` carries the contracted Bloch model
/// with `γ_k = 1 - c · ratio^{k-1}`, converging to the full Bloch ball.
///
/// The tensor product over sites is never materialized; consumers access the
/// per-site models.
#[derive(Debug, Clone, Copy)]
pub struct ProductNonIid {
    pub c: f64,
    pub ratio: f64,
}

impl ProductNonIid {
    pub fn new(c: f64, ratio: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&c) || !(0.0..1.0).contains(&ratio) {
            return Err(Error::ModelSpec(format!(
                "product_non_iid needs 0 <= c < 1 and 0 < ratio < 1, got c={c}, ratio={ratio}"
            )));
        }
        Ok(Self { c, ratio })
    }

    pub fn gamma(&self, k: usize) -> f64 {
        debug_assert!(k >= 1, "sites are numbered from 1");
        1.0 - self.c * self.ratio.powi(k as i32 - 1)
    }

    /// The model at site `k` (1-based).
    pub fn site(&self, k: usize) -> ScaledBloch {
        ScaledBloch {
            gamma: self.gamma(k),
        }
    }

    /// The limiting site model.
    pub fn limit(&self) -> ScaledBloch {
        ScaledBloch { gamma: 1.0 }
    }

    pub fn hilbert_dim(&self) -> usize {
        2
    }

    pub fn param_dim(&self) -> usize {
        3
    }
}

impl Default for ProductNonIid {
    fn default() -> Self {
        Self { c: 0.5, ratio: 0.5 }
    }
}

/// User-defined affine family `θ ↦ ρ_0 + Σ_i θ^i B_i`.
///
/// `ρ_0` must be a state and each direction `B_i` Hermitian and traceless;
/// positivity is validated at evaluation time.
#[derive(Debug, Clone)]
pub struct AffineModel {
    rho0: CMatrix,
    dirs: Vec<CMatrix>,
}

impl AffineModel {
    pub fn new(rho0: CMatrix, dirs: Vec<CMatrix>) -> Result<Self> {
        let base = crate::model::DensityMatrix::new(rho0.clone())
            .map_err(|e| Error::ModelSpec(format!("affine base state: {e}")))?;
        for (i, b) in dirs.iter().enumerate() {
            let h = HermitianMatrix::with_tol(b.clone(), 10.0 * tol::HERMITIAN_ABS)
                .map_err(|e| Error::ModelSpec(format!("affine direction {i}: {e}")))?;
            if h.trace_re().abs() > tol::UNIT_TRACE {
                return Err(Error::ModelSpec(format!(
                    "affine direction {i} must be traceless, got trace {}",
                    h.trace_re()
                )));
            }
            if b.nrows() != base.dim() {
                return Err(Error::ModelSpec(format!(
                    "affine direction {i} has dimension {} but the base state has {}",
                    b.nrows(),
                    base.dim()
                )));
            }
        }
        Ok(Self { rho0, dirs })
    }
}

impl Model for AffineModel {
    fn name(&self) -> &str {
        "affine"
    }
    fn hilbert_dim(&self) -> usize {
        self.rho0.nrows()
    }
    fn param_dim(&self) -> usize {
        self.dirs.len()
    }
    fn contains(&self, theta: &[f64]) -> bool {
        if theta.len() != self.dirs.len() {
            return false;
        }
        let m = self.state_unchecked(theta);
        let h = match HermitianMatrix::symmetrize(m) {
            Ok(h) => h,
            Err(_) => return false,
        };
        let tr_ok = (trace(h.matrix()).re - 1.0).abs() <= tol::UNIT_TRACE;
        tr_ok && h.eig().lambda_min() >= -tol::PSD_EIG
    }
    fn state_unchecked(&self, theta: &[f64]) -> CMatrix {
        let mut m = self.rho0.clone();
        for (t, b) in theta.iter().zip(&self.dirs) {
            m += b.scale(*t);
        }
        m
    }
    fn analytic_derivative(&self, _theta: &[f64], i: usize) -> Option<HermitianMatrix> {
        HermitianMatrix::symmetrize(self.dirs[i].clone()).ok()
    }
}

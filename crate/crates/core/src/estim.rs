//! Estimator risk experiments: the truncated ("Hodges-type") estimator's
//! weighted risk curves, James–Stein shrinkage Monte Carlo, the constant risk
//! of the bound-achieving regular estimator, and minimax grid scans.

use rand::Rng as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bound::{optimal_covariance, BoundResult};
use crate::linalg::{RMatrix, RVector};
use crate::quad::LegendreRule;
use crate::{Error, Result};

/// A risk curve over a scalar abscissa, with optional Monte Carlo standard
/// errors and the run metadata needed to reproduce it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskCurve {
    pub abscissa: Vec<f64>,
    pub risk: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<Vec<f64>>,
    pub meta: CurveMeta,
}

/// Provenance of a risk curve.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CurveMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<(usize, usize)>,
}

impl RiskCurve {
    pub fn validate(&self) -> Result<()> {
        if self.abscissa.len() != self.risk.len() {
            return Err(Error::DimensionMismatch {
                context: "risk curve lengths",
                expected: self.abscissa.len(),
                got: self.risk.len(),
            });
        }
        if let Some(se) = &self.stderr {
            if se.len() != self.risk.len() {
                return Err(Error::DimensionMismatch {
                    context: "risk curve stderr length",
                    expected: self.risk.len(),
                    got: se.len(),
                });
            }
        }
        if self.risk.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Invalid("risk values must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Quadrature controls for [`hodges_risk`].
#[derive(Debug, Clone, Copy)]
pub struct HodgesOptions {
    /// Gauss–Legendre nodes per radial panel.
    pub radial_order: usize,
    /// Gauss–Legendre nodes per angular panel.
    pub angular_order: usize,
    /// With truncation disabled the estimator is the plain one and the curve
    /// is flat at the weighted Gaussian moment.
    pub truncation: bool,
}

impl Default for HodgesOptions {
    fn default() -> Self {
        Self {
            radial_order: 64,
            angular_order: 32,
            truncation: true,
        }
    }
}

/// Rescaled weighted risk of the truncation-at-zero estimator on the pure
/// two-parameter family, evaluated on the `θ² = 0` slice:
///
/// `n · [ ∫_0^{2π} ∫_{n^{-1/4}}^∞ w_θ q_θ r dr dφ
///        + ∫_0^{2π} ∫_0^{n^{-1/4}} w_θ(0,φ) q_θ r dr dφ ]`
///
/// with `w_θ(r,φ) = (r cos φ - θ¹)²/(1-(θ¹)²) + r² sin²φ` and
/// `q_θ = n/(4π √(1-(θ¹)²)) · exp(-n w_θ / 4)` the polar density of the
/// first-stage estimate. Deterministic tensor-product Gauss–Legendre panels
/// are split at the truncation radius and refined on the Gaussian scale
/// `σ = √(2/n)`; the radial integral is cut off once the remaining Gaussian
/// mass is below 1e-12.
pub fn hodges_risk(theta1_grid: &[f64], n: u64, opts: &HodgesOptions) -> Result<RiskCurve> {
    if n == 0 {
        return Err(Error::Invalid("sample count must be at least 1".into()));
    }
    for &t in theta1_grid {
        if t.is_nan() || t.abs() >= 1.0 {
            return Err(Error::OutsideDomain {
                theta: vec![t, 0.0],
            });
        }
    }
    let rule_r = LegendreRule::new(opts.radial_order);
    let rule_phi = LegendreRule::new(opts.angular_order);
    let risk: Vec<f64> = theta1_grid
        .iter()
        .map(|&t| hodges_point(t, n, opts, &rule_r, &rule_phi))
        .collect();
    let curve = RiskCurve {
        abscissa: theta1_grid.to_vec(),
        risk,
        stderr: None,
        meta: CurveMeta {
            n: Some(n),
            quadrature: Some((opts.radial_order, opts.angular_order)),
            ..Default::default()
        },
    };
    curve.validate()?;
    Ok(curve)
}

fn hodges_point(
    theta1: f64,
    n: u64,
    opts: &HodgesOptions,
    rule_r: &LegendreRule,
    rule_phi: &LegendreRule,
) -> f64 {
    let nf = n as f64;
    let one_minus = 1.0 - theta1 * theta1;
    let w = |r: f64, phi: f64| -> f64 {
        let u1 = r * phi.cos() - theta1;
        let u2 = r * phi.sin();
        u1 * u1 / one_minus + u2 * u2
    };
    let q = |r: f64, phi: f64| -> f64 {
        nf / (4.0 * std::f64::consts::PI * one_minus.sqrt()) * (-nf / 4.0 * w(r, phi)).exp()
    };

    let sigma = (2.0 / nf).sqrt();
    let r_trunc = if opts.truncation { nf.powf(-0.25) } else { 0.0 };
    // Beyond |θ¹| + 9σ the remaining 2-d Gaussian mass is below 1e-12.
    let r_max = theta1.abs() + 9.0 * sigma;

    // Radial break points: the truncation radius plus the Gaussian scale
    // around the bump at r = |θ¹|.
    let mut breaks = vec![0.0, r_trunc, r_max];
    for k in -9..=9 {
        let b = theta1.abs() + k as f64 * sigma;
        if b > 0.0 && b < r_max {
            breaks.push(b);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    // Angular break points: the polar bump sits at φ = 0 (θ¹ ≥ 0) or π,
    // with width σ/|θ¹| when the bump radius dominates the scale.
    let phi0 = if theta1 >= 0.0 {
        0.0
    } else {
        std::f64::consts::PI
    };
    let dphi = (sigma / theta1.abs().max(sigma)).min(std::f64::consts::FRAC_PI_8);
    let mut phi_breaks: Vec<f64> = Vec::new();
    for j in 0..=8 {
        phi_breaks.push(phi0 - std::f64::consts::PI + j as f64 * std::f64::consts::FRAC_PI_4);
    }
    for k in -8..=8 {
        phi_breaks.push(phi0 + k as f64 * dphi);
    }
    phi_breaks.sort_by(f64::total_cmp);
    phi_breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    phi_breaks.retain(|&p| {
        p >= phi0 - std::f64::consts::PI - 1e-12 && p <= phi0 + std::f64::consts::PI + 1e-12
    });

    let mut total = 0.0;
    for rw in breaks.windows(2) {
        let (ra, rb) = (rw[0], rw[1]);
        if rb - ra < 1e-15 {
            continue;
        }
        let inner = rb <= r_trunc + 1e-15;
        for pw in phi_breaks.windows(2) {
            let (pa, pb) = (pw[0], pw[1]);
            if pb - pa < 1e-15 {
                continue;
            }
            let mut cell = 0.0;
            for (r, wr) in rule_r.scaled(ra, rb) {
                for (phi, wphi) in rule_phi.scaled(pa, pb) {
                    let weight = if inner { w(0.0, phi) } else { w(r, phi) };
                    cell += wr * wphi * weight * q(r, phi) * r;
                }
            }
            total += cell;
        }
    }
    nf * total
}

/// Monte Carlo risk estimate of the shrinkage estimator.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct JamesSteinRisk {
    pub risk: f64,
    pub stderr: f64,
}

/// The fixed Monte Carlo generator. Changing it is a breaking change for
/// golden outputs.
pub const RNG_ALGORITHM: &str = "chacha8(stream = shard index + 1)";

const SHARD_SIZE: u64 = 1 << 16;

/// Monte Carlo estimate of `E‖y - h‖²` for `x ~ N(h, I₃)` under the
/// James–Stein shrinkage map `y = (1 - 1/‖x‖²) x`, with the standard error
/// of the mean. By Stein's identity the risk is `3 - E[1/‖x‖²] < 3` for
/// every shift `h`, approaching 3 as `‖h‖ → ∞` and equal to 2 at `h = 0`.
///
/// Sampling uses ChaCha8 with one stream per fixed-size shard derived from
/// `(seed, shard index)`, and shards are reduced in index order, so the
/// result is bit-stable for a given `(seed, samples)` regardless of how the
/// work is scheduled. Draws with `‖x‖ < 1e-12` are rejected and resampled.
///
/// Near `h = 0` the loss has a `1/‖x‖²` tail with infinite second moment;
/// the reported standard error (from the sample variance) then understates
/// the true fluctuation of the mean, which converges at rate `m^{-1/3}`.
pub fn james_stein_risk(h: &[f64; 3], samples: u64, seed: u64) -> Result<JamesSteinRisk> {
    if samples < 10_000 {
        return Err(Error::Invalid(
            "james_stein_risk needs at least 10^4 samples".into(),
        ));
    }
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    let shards = samples.div_ceil(SHARD_SIZE);
    for shard in 0..shards {
        let lo = shard * SHARD_SIZE;
        let hi = (lo + SHARD_SIZE).min(samples);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(shard + 1);
        let mut local = 0.0f64;
        let mut local_sq = 0.0f64;
        for _ in lo..hi {
            let mut x = [0.0f64; 3];
            loop {
                let mut norm_sq = 0.0;
                for (xi, hi_) in x.iter_mut().zip(h) {
                    let z: f64 = rng.sample(StandardNormal);
                    *xi = hi_ + z;
                    norm_sq += *xi * *xi;
                }
                if norm_sq.sqrt() >= 1e-12 {
                    break;
                }
            }
            let norm_sq = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            let shrink = 1.0 - 1.0 / norm_sq;
            let mut err = 0.0;
            for (xi, hi_) in x.iter().zip(h) {
                let yi = shrink * xi;
                err += (yi - hi_) * (yi - hi_);
            }
            local += err;
            local_sq += err * err;
        }
        sum += local;
        sum_sq += local_sq;
    }
    let m = samples as f64;
    let risk = sum / m;
    let var = (sum_sq - m * risk * risk) / (m - 1.0);
    Ok(JamesSteinRisk {
        risk,
        stderr: (var / m).sqrt(),
    })
}

/// Risk curve of the shrinkage estimator over a grid of shift magnitudes
/// (each point an independent seeded run along the first axis).
pub fn james_stein_curve(h_norms: &[f64], samples: u64, seed: u64) -> Result<RiskCurve> {
    let mut risk = Vec::with_capacity(h_norms.len());
    let mut stderr = Vec::with_capacity(h_norms.len());
    for (i, &hn) in h_norms.iter().enumerate() {
        let out = james_stein_risk(&[hn, 0.0, 0.0], samples, seed.wrapping_add(i as u64))?;
        risk.push(out.risk);
        stderr.push(out.stderr);
    }
    let curve = RiskCurve {
        abscissa: h_norms.to_vec(),
        risk,
        stderr: Some(stderr),
        meta: CurveMeta {
            seed: Some(seed),
            samples: Some(samples),
            ..Default::default()
        },
    };
    curve.validate()?;
    Ok(curve)
}

/// The limiting weighted risk of the bound-achieving regular estimator: the
/// constant `Tr(G V*)` at every shift (certified against the bound result).
pub fn regular_risk(res: &BoundResult, g: &RMatrix, h_grid: &[Vec<f64>]) -> Result<RiskCurve> {
    let v_star = optimal_covariance(res, g)?;
    let value = (g * v_star).trace();
    let abscissa: Vec<f64> = h_grid
        .iter()
        .map(|h| RVector::from_column_slice(h).norm())
        .collect();
    let curve = RiskCurve {
        abscissa,
        risk: vec![value; h_grid.len()],
        stderr: None,
        meta: CurveMeta::default(),
    };
    curve.validate()?;
    Ok(curve)
}

/// Supremum of the risk over a finite index subset of the curve.
pub fn minimax_scan(curve: &RiskCurve, subset: &[usize]) -> Result<f64> {
    curve.validate()?;
    if subset.is_empty() {
        return Err(Error::Invalid(
            "minimax scan needs a nonempty subset".into(),
        ));
    }
    let mut sup = f64::NEG_INFINITY;
    for &i in subset {
        let v = *curve.risk.get(i).ok_or_else(|| {
            Error::Invalid(format!(
                "index {i} outside the curve (len {})",
                curve.risk.len()
            ))
        })?;
        sup = sup.max(v);
    }
    Ok(sup)
}

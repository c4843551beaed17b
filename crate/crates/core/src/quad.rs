//! Gaussian quadrature rules via the Golub–Welsch eigenvalue method.

use crate::linalg::{real_sym_eig, RMatrix};

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    // Jacobi matrix for Legendre polynomials: diagonal 0, off-diagonal
    // b_k = k / sqrt(4k^2 - 1).
    let mut j = RMatrix::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let (vals, vecs) = real_sym_eig(&j).expect("square");
    let nodes: Vec<f64> = vals.iter().copied().collect();
    let weights: Vec<f64> = (0..n).map(|i| 2.0 * vecs[(0, i)] * vecs[(0, i)]).collect();
    (nodes, weights)
}

/// Nodes and weights of an `n`-point Gauss–Hermite rule for the weight
/// `exp(-x^2)` on the real line.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut j = RMatrix::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let (vals, vecs) = real_sym_eig(&j).expect("square");
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let nodes: Vec<f64> = vals.iter().copied().collect();
    let weights: Vec<f64> = (0..n)
        .map(|i| sqrt_pi * vecs[(0, i)] * vecs[(0, i)])
        .collect();
    (nodes, weights)
}

/// A reusable Gauss–Legendre rule, rescalable to arbitrary intervals.
#[derive(Debug, Clone)]
pub struct LegendreRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl LegendreRule {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        Self { nodes, weights }
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Scaled nodes and weights on `[a, b]`.
    pub fn scaled(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let rule = LegendreRule::new(8);
        // degree up to 2n-1 = 15 is exact
        let val = rule.integrate(0.0, 1.0, |x| x.powi(7));
        assert!((val - 1.0 / 8.0).abs() < 1e-14);
        let val = rule.integrate(-2.0, 3.0, |x| 3.0 * x * x);
        assert!((val - (27.0 + 8.0)).abs() < 1e-12);
    }

    #[test]
    fn hermite_matches_gaussian_moments() {
        let (nodes, weights) = gauss_hermite(32);
        // ∫ e^{-x^2} dx = sqrt(pi)
        let total: f64 = weights.iter().sum();
        assert!((total - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        // ∫ x^2 e^{-x^2} dx = sqrt(pi)/2
        let second: f64 = nodes.iter().zip(&weights).map(|(&x, &w)| w * x * x).sum();
        assert!((second - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
    }
}

//! Deterministic test support: seeded random matrices and a derivative-free
//! direct-search minimizer used as an independent oracle in the test suites.

use rand::Rng as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c64, complexify, CMatrix, HermitianMatrix, RMatrix};
use crate::model::DensityMatrix;

/// Seeded generator used throughout the tests (ChaCha8).
pub struct Rng {
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn next_index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }
}

/// Random complex matrix with i.i.d. standard normal real and imaginary parts.
pub fn rand_complex(rng: &mut Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c64(rng.normal(), rng.normal()))
}

/// Random real matrix with i.i.d. standard normal entries.
pub fn rand_real(rng: &mut Rng, rows: usize, cols: usize) -> RMatrix {
    RMatrix::from_fn(rows, cols, |_, _| rng.normal())
}

/// Random Hermitian matrix `(A + A†)/2`.
pub fn rand_herm(rng: &mut Rng, dim: usize) -> HermitianMatrix {
    let a = rand_complex(rng, dim, dim);
    HermitianMatrix::symmetrize(a).expect("square by construction")
}

/// Random Hermitian PSD matrix `A A† / dim`.
pub fn rand_psd(rng: &mut Rng, dim: usize) -> HermitianMatrix {
    let a = rand_complex(rng, dim, dim);
    let p = (&a * a.adjoint()).scale(1.0 / dim as f64);
    HermitianMatrix::symmetrize(p).expect("square by construction")
}

/// Random complex Hermitian PSD matrix with strictly positive real part,
/// shaped like an observable covariance `Σ`.
pub fn rand_sigma_psd(rng: &mut Rng, dim: usize) -> CMatrix {
    let a = rand_complex(rng, dim, dim);
    let p = (&a * a.adjoint()).scale(1.0 / dim as f64) + CMatrix::identity(dim, dim).scale(0.05);
    (&p + p.adjoint()).scale(0.5)
}

/// Random density matrix (PSD, trace one, strictly positive a.s.).
pub fn rand_density(rng: &mut Rng, dim: usize) -> DensityMatrix {
    let p = rand_psd(rng, dim);
    let tr = p.trace_re();
    let rho = p.matrix().scale(1.0 / tr);
    DensityMatrix::new(rho).expect("normalized PSD matrix is a state")
}

/// Random unitary from the QR factorization of a Gaussian matrix.
pub fn rand_unitary(rng: &mut Rng, dim: usize) -> CMatrix {
    let a = rand_complex(rng, dim, dim);
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    // Fix phases so the factorization is unique and exactly unitary.
    for j in 0..dim {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for i in 0..dim {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Random real symmetric positive definite matrix.
pub fn rand_spd_real(rng: &mut Rng, dim: usize) -> RMatrix {
    let a = rand_real(rng, dim, dim);
    &a * a.transpose() / dim as f64 + RMatrix::identity(dim, dim).scale(0.1)
}

/// Random real orthogonal matrix.
pub fn rand_orthogonal(rng: &mut Rng, dim: usize) -> RMatrix {
    let a = rand_real(rng, dim, dim);
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            for i in 0..dim {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Random Hermitian matrix embedded as `U diag(v) U†` with prescribed
/// eigenvalues.
pub fn herm_with_spectrum(rng: &mut Rng, spectrum: &[f64]) -> HermitianMatrix {
    let dim = spectrum.len();
    let u = rand_unitary(rng, dim);
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        dim,
        spectrum.iter().map(|&x| c64(x, 0.0)),
    ));
    HermitianMatrix::symmetrize(&u * d * u.adjoint()).expect("square")
}

/// Nelder–Mead direct search, used as an independent minimization oracle.
///
/// Returns `(argmin, min)` after `max_iter` iterations or when the simplex
/// spread falls below `ftol`. Restarts (with a shrunken initial simplex around
/// the incumbent) are controlled by `restarts`.
pub fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    scale: f64,
    max_iter: usize,
    ftol: f64,
    restarts: usize,
) -> (Vec<f64>, f64) {
    let mut best = x0.to_vec();
    let mut best_val = f(&best);
    let mut step = scale;
    for _ in 0..=restarts {
        let (x, v) = nelder_mead_once(f, &best, step, max_iter, ftol);
        if v < best_val {
            best = x;
            best_val = v;
        }
        step *= 0.2;
    }
    (best, best_val)
}

fn nelder_mead_once(
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    scale: f64,
    max_iter: usize,
    ftol: f64,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    if n == 0 {
        return (vec![], f(&[]));
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += scale;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| f(x)).collect();

    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        if (values[n] - values[0]).abs() <= ftol * (1.0 + values[0].abs()) {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|x| x[j]).sum::<f64>() / n as f64)
            .collect();
        let refl: Vec<f64> = (0..n)
            .map(|j| centroid[j] + alpha * (centroid[j] - simplex[n][j]))
            .collect();
        let f_refl = f(&refl);

        if f_refl < values[0] {
            let expand: Vec<f64> = (0..n)
                .map(|j| centroid[j] + gamma * (refl[j] - centroid[j]))
                .collect();
            let f_exp = f(&expand);
            if f_exp < f_refl {
                simplex[n] = expand;
                values[n] = f_exp;
            } else {
                simplex[n] = refl;
                values[n] = f_refl;
            }
        } else if f_refl < values[n - 1] {
            simplex[n] = refl;
            values[n] = f_refl;
        } else {
            let contract: Vec<f64> = (0..n)
                .map(|j| centroid[j] + rho * (simplex[n][j] - centroid[j]))
                .collect();
            let f_con = f(&contract);
            if f_con < values[n] {
                simplex[n] = contract;
                values[n] = f_con;
            } else {
                let best = simplex[0].clone();
                for i in 1..=n {
                    for (v, b) in simplex[i].iter_mut().zip(&best) {
                        *v = b + sigma * (*v - b);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=n {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex[best].clone(), values[best])
}

/// Convert a real matrix into the complex carrier (re-export for tests).
pub fn to_complex(m: &RMatrix) -> CMatrix {
    complexify(m)
}

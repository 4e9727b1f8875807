//! Eigenvalues of symmetric stochastic matrices.
//!
//! The dense cyclic Jacobi solver is the ground truth. [`second_eigenvalue`]
//! runs deflated power iteration on `(A + I) / 2` against the sparse support
//! and falls back to the dense solver when it does not converge.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphs::StochasticMatrix;
use crate::limits::Limits;

/// Off-diagonal Frobenius norm at which Jacobi sweeps stop (relative to the
/// Frobenius norm of the input, which is at most `sqrt(n)` for stochastic input).
pub const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Residual tolerance for power iteration.
pub const POWER_TOL: f64 = 1e-12;
pub const POWER_MAX_ITERS: usize = 1_000_000;
const POWER_SEED: u64 = 0x5eed_1a2b;

#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    /// Sorted non-increasing.
    pub eigenvalues: Vec<f64>,
    /// `1 - eigenvalues[1]` (0 when n = 1).
    pub gap: f64,
    /// `max_j ||A v_j - λ_j v_j||_∞`.
    pub residual: f64,
    /// Unit eigenvectors as columns, ordered like `eigenvalues`.
    #[serde(skip)]
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn lambda2(&self) -> f64 {
        self.eigenvalues.get(1).copied().unwrap_or(f64::NAN)
    }

    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        self.eigenvectors.column(i).iter().copied().collect()
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns `(eigenvalues, eigenvectors)` sorted by eigenvalue in
/// non-increasing order; ties are ordered by original diagonal position.
pub fn jacobi_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::InvalidMatrix("jacobi_eigen needs a square matrix".into()));
    }
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.norm().max(f64::MIN_POSITIVE);

    let off = |a: &DMatrix<f64>| -> f64 {
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut converged = off(&a) <= JACOBI_TOL * scale;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    let np = c * arp - s * arq;
                    let nq = s * arp + c * arq;
                    a[(r, p)] = np;
                    a[(p, r)] = np;
                    a[(r, q)] = nq;
                    a[(q, r)] = nq;
                }
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;

                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = c * vrp - s * vrq;
                    v[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
        sweeps += 1;
        converged = off(&a) <= JACOBI_TOL * scale;
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok((values, vectors))
}

fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-9 {
                return Err(Error::InvalidMatrix(format!("asymmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// All eigenvalues and eigenvectors of `a` via dense Jacobi.
pub fn full_spectrum(a: &StochasticMatrix) -> Result<Spectrum> {
    let n = a.n();
    Limits::from_env().check(n)?;
    let m = a.entries();
    check_symmetric(m)?;
    let (eigenvalues, eigenvectors) = jacobi_eigen(m)?;

    let mut residual = 0.0_f64;
    let mut av = vec![0.0; n];
    for (c, &lambda) in eigenvalues.iter().enumerate() {
        let col: Vec<f64> = eigenvectors.column(c).iter().copied().collect();
        a.mul_vec(&col, &mut av);
        for (x, y) in av.iter().zip(&col) {
            residual = residual.max((x - lambda * y).abs());
        }
    }
    let gap = if n > 1 { 1.0 - eigenvalues[1] } else { 0.0 };
    Ok(Spectrum { eigenvalues, gap, residual, eigenvectors })
}

/// Outcome of deflated power iteration.
#[derive(Debug, Clone)]
pub struct PowerIteration {
    pub lambda2: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn center(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
    norm
}

/// Deflated power iteration for `lambda2`: the constant vector is projected
/// out and the iteration runs on `B = (A + I) / 2`, whose spectrum lies in
/// `[0, 1]`. Stops when `||B v - μ v||_2 <= tol`.
pub fn power_iteration(a: &StochasticMatrix, tol: f64, max_iters: usize) -> PowerIteration {
    let n = a.n();
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    center(&mut v);
    normalize(&mut v);
    let mut w = vec![0.0; n];
    let mut mu = 0.0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iters {
        a.mul_vec(&v, &mut w);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi = 0.5 * (*wi + vi);
        }
        center(&mut w);
        mu = w.iter().zip(&v).map(|(x, y)| x * y).sum();
        residual = w.iter().zip(&v).map(|(x, y)| (x - mu * y).powi(2)).sum::<f64>().sqrt();
        iterations += 1;
        if normalize(&mut w) == 0.0 {
            // v lies in the kernel of B, so -1 is the only remaining eigenvalue.
            mu = 0.0;
            residual = 0.0;
            break;
        }
        std::mem::swap(&mut v, &mut w);
        if residual <= tol {
            break;
        }
    }
    PowerIteration {
        lambda2: 2.0 * mu - 1.0,
        vector: v,
        iterations,
        residual,
        converged: residual <= tol,
    }
}

/// `lambda2(a)`: deflated power iteration with a dense Jacobi fallback.
pub fn second_eigenvalue(a: &StochasticMatrix) -> Result<f64> {
    if a.n() < 2 {
        return Err(Error::InvalidMatrix("lambda2 needs n >= 2".into()));
    }
    check_symmetric(a.entries())?;
    let run = power_iteration(a, POWER_TOL, POWER_MAX_ITERS);
    if run.converged && run.lambda2.is_finite() {
        return Ok(run.lambda2.clamp(-1.0, 1.0));
    }
    full_spectrum(a).map(|s| s.lambda2()).map_err(|e| match e {
        Error::NumericalFailure(msg) => Error::NumericalFailure(format!(
            "power iteration stalled (residual {:.3e}) and dense fallback failed: {msg}",
            run.residual
        )),
        other => other,
    })
}

/// `lambda2(a)` together with a unit eigenvector orthogonal to the constant
/// vector, from the dense solver.
pub fn second_eigenpair(a: &StochasticMatrix) -> Result<(f64, Vec<f64>)> {
    if a.n() < 2 {
        return Err(Error::InvalidMatrix("lambda2 needs n >= 2".into()));
    }
    let spec = full_spectrum(a)?;
    let mut v = spec.eigenvector(1);
    // When lambda2 = 1 the eigenspace may contain the constant vector.
    center(&mut v);
    if normalize(&mut v) < 1e-6 {
        v = spec.eigenvector(0);
        center(&mut v);
        normalize(&mut v);
    }
    Ok((spec.lambda2(), v))
}

/// `1 - lambda2(a)`.
pub fn spectral_gap(a: &StochasticMatrix) -> Result<f64> {
    second_eigenvalue(a).map(|l| 1.0 - l)
}

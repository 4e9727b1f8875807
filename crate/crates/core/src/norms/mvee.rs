//! Minimum-volume enclosing ellipsoid by Khachiyan's barycentric coordinate ascent.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{invalid, Error, Result};

pub const MVEE_TOL: f64 = 1e-7;
pub const MVEE_MAX_ITERS: usize = 100_000;

/// `{ x : (x - c)ᵀ A (x - c) <= 1 }`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ellipsoid {
    pub center: Vec<f64>,
    /// Row-major `dim × dim` shape matrix `A`.
    pub shape: Vec<f64>,
    pub iterations: usize,
    /// Final `max_j M_j / (d + 1) - 1`.
    pub gap: f64,
    pub converged: bool,
}

impl Ellipsoid {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn shape_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_row_slice(d, d, &self.shape)
    }

    /// `sqrt((x - c)ᵀ A (x - c))`; at most 1 exactly on the ellipsoid.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let z = DVector::from_iterator(d, x.iter().zip(&self.center).map(|(a, b)| a - b));
        (z.dot(&(self.shape_matrix() * &z))).max(0.0).sqrt()
    }
}

/// Khachiyan's algorithm on the lifted points `(p, 1)`.
///
/// Iterates until the optimality gap drops below `tol` or `max_iters` steps
/// were taken; in the latter case `converged` is false. The returned
/// ellipsoid always contains every input point.
pub fn khachiyan(points: &[Vec<f64>], tol: f64, max_iters: usize) -> Result<Ellipsoid> {
    let d = points.first().map(Vec::len).ok_or_else(|| invalid("MVEE needs points"))?;
    let m = points.len();
    if m <= d {
        return Err(invalid(format!("MVEE of {m} points in dimension {d} is degenerate")));
    }
    let q = DMatrix::from_fn(d + 1, m, |r, c| if r < d { points[c][r] } else { 1.0 });
    let mut u = DVector::from_element(m, 1.0 / m as f64);
    let lifted = (d + 1) as f64;

    let mut iterations = 0;
    let mut gap;
    loop {
        let x = &q * DMatrix::from_diagonal(&u) * q.transpose();
        let xinv = x
            .try_inverse()
            .ok_or_else(|| Error::NumericalFailure("MVEE moment matrix is singular".into()))?;
        let mut best = (0usize, f64::NEG_INFINITY);
        for j in 0..m {
            let col = q.column(j);
            let mj = col.dot(&(&xinv * col));
            if mj > best.1 {
                best = (j, mj);
            }
        }
        gap = best.1 / lifted - 1.0;
        if gap <= tol || iterations >= max_iters {
            break;
        }
        let step = (best.1 - lifted) / (lifted * (best.1 - 1.0));
        u *= 1.0 - step;
        u[best.0] += step;
        iterations += 1;
    }

    let p = q.rows(0, d).into_owned();
    let c = &p * &u;
    let s = &p * DMatrix::from_diagonal(&u) * p.transpose() - &c * c.transpose();
    let mut a = s
        .try_inverse()
        .ok_or_else(|| Error::NumericalFailure("MVEE scatter matrix is singular".into()))?
        / d as f64;
    // an approximate optimum can leave points slightly outside; grow to cover them
    let reach = (0..m)
        .map(|j| {
            let z = DVector::from_iterator(d, points[j].iter().zip(c.iter()).map(|(x, y)| x - y));
            z.dot(&(&a * &z))
        })
        .fold(0.0_f64, f64::max);
    if reach > 1.0 {
        a /= reach;
    }
    let shape = (0..d).flat_map(|r| (0..d).map(move |cc| (r, cc))).map(|(r, cc)| a[(r, cc)]).collect();
    Ok(Ellipsoid {
        center: c.iter().copied().collect(),
        shape,
        iterations,
        gap,
        converged: gap <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_gives_circumscribed_circle() {
        let pts = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]];
        let e = khachiyan(&pts, MVEE_TOL, MVEE_MAX_ITERS).unwrap();
        assert!(e.converged);
        // radius sqrt(2) circle: A = I / 2
        let a = e.shape_matrix();
        assert!((a[(0, 0)] - 0.5).abs() < 1e-5 && (a[(1, 1)] - 0.5).abs() < 1e-5);
        assert!(a[(0, 1)].abs() < 1e-9);
        assert!(e.center.iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn contains_all_points() {
        let pts = vec![
            vec![2.0, 0.1],
            vec![-2.0, -0.1],
            vec![0.3, 1.0],
            vec![-0.3, -1.0],
            vec![1.0, 0.9],
            vec![-1.0, -0.9],
        ];
        let e = khachiyan(&pts, MVEE_TOL, MVEE_MAX_ITERS).unwrap();
        for p in &pts {
            assert!(e.gauge(p) <= 1.0 + 1e-6, "{}", e.gauge(p));
        }
    }

    #[test]
    fn degenerate_input() {
        assert!(khachiyan(&[vec![1.0, 0.0], vec![-1.0, 0.0]], MVEE_TOL, 10).is_err());
    }
}

//! Finite-dimensional normed spaces.
//!
//! Three kinds of norm are supported: `ℓ_p^dim` for `p ∈ [1, ∞]`, quadratic
//! norms `sqrt(xᵀQx)` for a positive-definite `Q`, and gauges of centrally
//! symmetric polytopes. Besides evaluation and subgradients (used by the
//! optimizers) this module estimates the Euclidean distance `d_X` and
//! certified lower bounds on the smoothness and convexity constants.

mod constants;
mod mvee;
mod polytope;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

pub use constants::{convexity_estimate, smoothness_estimate, ConstantKind, SmoothnessEstimate};
pub use mvee::{khachiyan, Ellipsoid, MVEE_MAX_ITERS, MVEE_TOL};
pub use polytope::{Polytope, MAX_FACET_SUBSETS};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum NormKind {
    Lp { p: f64 },
    Quadratic { q: DMatrix<f64> },
    Polytope(Polytope),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormedSpace {
    dim: usize,
    kind: NormKind,
}

impl NormedSpace {
    /// `ℓ_p^dim`; pass `f64::INFINITY` for the max norm.
    pub fn lp(dim: usize, p: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if !(p >= 1.0) {
            return Err(invalid(format!("ℓ_p needs p >= 1, got {p}")));
        }
        Ok(Self { dim, kind: NormKind::Lp { p } })
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::lp(dim, 2.0)
    }

    pub fn real_line() -> Self {
        Self { dim: 1, kind: NormKind::Lp { p: 2.0 } }
    }

    /// `sqrt(xᵀQx)`; `q` must be symmetric within 1e-12 and positive definite.
    pub fn quadratic(q: DMatrix<f64>) -> Result<Self> {
        let dim = q.nrows();
        if dim == 0 || q.ncols() != dim {
            return Err(invalid("quadratic form must be a nonempty square matrix"));
        }
        if q.iter().any(|x| !x.is_finite()) {
            return Err(invalid("quadratic form entries must be finite"));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if (q[(i, j)] - q[(j, i)]).abs() > 1e-12 {
                    return Err(invalid(format!("quadratic form is asymmetric at ({i}, {j})")));
                }
            }
        }
        let min_eig = q.clone().symmetric_eigen().eigenvalues.min();
        if !(min_eig > 0.0) {
            return Err(invalid(format!("quadratic form is not positive definite (min eigenvalue {min_eig})")));
        }
        Ok(Self { dim, kind: NormKind::Quadratic { q } })
    }

    pub fn polytope(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let p = Polytope::new(vertices)?;
        Ok(Self { dim: p.dim(), kind: NormKind::Polytope(p) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    pub fn is_hilbert(&self) -> bool {
        match &self.kind {
            NormKind::Lp { p } => *p == 2.0 || self.dim == 1,
            NormKind::Quadratic { .. } => true,
            NormKind::Polytope(_) => false,
        }
    }

    /// `‖x‖`, checking that `x` has length `dim`.
    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(invalid(format!("point has length {}, space has dimension {}", x.len(), self.dim)));
        }
        Ok(self.eval(x))
    }

    /// `‖x‖` without the dimension check.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            NormKind::Lp { p } => lp_norm(x, *p),
            NormKind::Quadratic { q } => {
                let mut acc = 0.0;
                for i in 0..self.dim {
                    let mut row = 0.0;
                    for j in 0..self.dim {
                        row += q[(i, j)] * x[j];
                    }
                    acc += x[i] * row;
                }
                acc.max(0.0).sqrt()
            }
            NormKind::Polytope(p) => p.gauge(x),
        }
    }

    /// `‖x - y‖` without allocation for the ℓ_p kinds.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match &self.kind {
            NormKind::Lp { p } => lp_distance(x, y, *p),
            _ => {
                let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                self.eval(&z)
            }
        }
    }

    /// Writes a subgradient of the norm at `x` into `g` and returns `‖x‖`.
    ///
    /// Ties (ℓ_∞ maximal coordinates, polytope facets) go to the lowest index;
    /// the subgradient at 0 is 0.
    pub fn subgradient(&self, x: &[f64], g: &mut [f64]) -> f64 {
        g.iter_mut().for_each(|v| *v = 0.0);
        match &self.kind {
            NormKind::Lp { p } => {
                let norm = lp_norm(x, *p);
                if norm == 0.0 {
                    return 0.0;
                }
                let p = *p;
                if p == 1.0 {
                    for (gi, &xi) in g.iter_mut().zip(x) {
                        *gi = if xi > 0.0 { 1.0 } else if xi < 0.0 { -1.0 } else { 0.0 };
                    }
                } else if p.is_infinite() {
                    let mut arg = 0;
                    for (i, &xi) in x.iter().enumerate() {
                        if xi.abs() > x[arg].abs() {
                            arg = i;
                        }
                    }
                    g[arg] = x[arg].signum();
                } else if p == 2.0 {
                    for (gi, &xi) in g.iter_mut().zip(x) {
                        *gi = xi / norm;
                    }
                } else {
                    for (gi, &xi) in g.iter_mut().zip(x) {
                        *gi = xi.signum() * (xi.abs() / norm).powf(p - 1.0);
                    }
                }
                norm
            }
            NormKind::Quadratic { q } => {
                let qx = q * DVector::from_column_slice(x);
                let norm = qx.iter().zip(x).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt();
                if norm > 0.0 {
                    for (gi, v) in g.iter_mut().zip(qx.iter()) {
                        *gi = v / norm;
                    }
                }
                norm
            }
            NormKind::Polytope(p) => {
                let (norm, y) = p.gauge_with_functional(x);
                g.copy_from_slice(&y);
                norm
            }
        }
    }
}

fn lp_norm(x: &[f64], p: f64) -> f64 {
    let max = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if p.is_infinite() || max == 0.0 {
        return max;
    }
    if p == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    if p == 2.0 {
        return x.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    max * x.iter().map(|v| (v.abs() / max).powf(p)).sum::<f64>().powf(1.0 / p)
}

fn lp_distance(x: &[f64], y: &[f64], p: f64) -> f64 {
    if x.len() == 1 {
        return (x[0] - y[0]).abs();
    }
    if p == 2.0 {
        return x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    }
    if p == 1.0 {
        return x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
    }
    if p.is_infinite() {
        return x.iter().zip(y).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    }
    let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    lp_norm(&z, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMethod {
    /// Closed form: 1 for Hilbert spaces, `dim^{|1/p - 1/2|}` for ℓ_p.
    Analytic,
    /// John's bound `sqrt(dim)`.
    JohnBound,
    /// Sandwich constant of the minimum-volume enclosing ellipsoid.
    Mvee,
}

/// Bracket on the Banach–Mazur distance `d_X` to Hilbert space.
///
/// `upper` is always a certified upper bound on `d_X`. For the analytic kinds
/// `lower = upper = d_X`. For polytopes `lower` is the largest ratio
/// `‖x‖ / |x|_E` seen over sampled directions, where `|·|_E` is the
/// Hilbertian norm of the enclosing ellipsoid; it brackets the sandwich
/// constant of that ellipsoid from below.
#[derive(Debug, Clone, Serialize)]
pub struct HilbertDistanceEstimate {
    pub lower: f64,
    pub upper: f64,
    pub method: DistanceMethod,
    /// Set when the ellipsoid iteration hit its cap before the gap tolerance.
    pub approximate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ellipsoid: Option<Ellipsoid>,
}

pub const DIRECTION_SAMPLES: usize = 10_000;
const DIRECTION_SEED: u64 = 0xd15c_0001;

/// Estimates `d_X`.
///
/// For a polytope the enclosing ellipsoid `E` is rescaled so that every
/// vertex satisfies `|v|_E <= 1`, which gives `|x|_E <= ‖x‖` everywhere. The
/// upper bound is `min(sqrt(dim), max_y sqrt(yᵀ A⁻¹ y))` over facet
/// functionals `y`, i.e. the exact sandwich constant of `E`; without
/// enumerated facets only John's bound is available.
pub fn hilbert_distance(space: &NormedSpace) -> Result<HilbertDistanceEstimate> {
    let dim = space.dim() as f64;
    match space.kind() {
        NormKind::Quadratic { .. } => Ok(HilbertDistanceEstimate {
            lower: 1.0,
            upper: 1.0,
            method: DistanceMethod::Analytic,
            approximate: false,
            ellipsoid: None,
        }),
        NormKind::Lp { p } => {
            let exponent = (1.0 / p - 0.5).abs();
            let d = dim.powf(exponent);
            Ok(HilbertDistanceEstimate {
                lower: d,
                upper: d,
                method: DistanceMethod::Analytic,
                approximate: false,
                ellipsoid: None,
            })
        }
        NormKind::Polytope(poly) => {
            let mut ellipsoid = khachiyan(poly.vertices(), MVEE_TOL, MVEE_MAX_ITERS)?;
            let mut shape = ellipsoid.shape_matrix();
            let reach = poly
                .vertices()
                .iter()
                .map(|v| {
                    let v = DVector::from_column_slice(v);
                    v.dot(&(&shape * &v)).max(0.0).sqrt()
                })
                .fold(0.0_f64, f64::max);
            shape /= reach * reach;
            ellipsoid.shape = shape.transpose().iter().copied().collect();
            ellipsoid.center = vec![0.0; space.dim()];

            let john = dim.sqrt();
            let (upper, method) = match poly.facets() {
                Some(facets) => {
                    let inv = shape
                        .clone()
                        .try_inverse()
                        .ok_or_else(|| crate::Error::NumericalFailure("ellipsoid shape is singular".into()))?;
                    let sandwich = facets
                        .iter()
                        .map(|y| {
                            let y = DVector::from_column_slice(y);
                            y.dot(&(&inv * &y)).max(0.0).sqrt()
                        })
                        .fold(1.0_f64, f64::max);
                    if sandwich <= john {
                        (sandwich, DistanceMethod::Mvee)
                    } else {
                        (john, DistanceMethod::JohnBound)
                    }
                }
                None => (john, DistanceMethod::JohnBound),
            };

            let mut rng = ChaCha8Rng::seed_from_u64(DIRECTION_SEED);
            let mut lower = 1.0_f64;
            let mut x = vec![0.0; space.dim()];
            for _ in 0..DIRECTION_SAMPLES {
                x.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
                let xv = DVector::from_column_slice(&x);
                let hilbert = xv.dot(&(&shape * &xv)).max(0.0).sqrt();
                if hilbert > 0.0 {
                    lower = lower.max(poly.gauge(&x) / hilbert);
                }
            }
            let approximate = !ellipsoid.converged;
            Ok(HilbertDistanceEstimate {
                lower: lower.min(upper),
                upper,
                method,
                approximate,
                ellipsoid: Some(ellipsoid),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_examples() {
        let l2 = NormedSpace::lp(2, 2.0).unwrap();
        assert_eq!(l2.norm(&[3.0, 4.0]).unwrap(), 5.0);
        let linf = NormedSpace::lp(2, f64::INFINITY).unwrap();
        assert_eq!(linf.norm(&[1.0, -2.0]).unwrap(), 2.0);
        assert!(l2.norm(&[1.0]).is_err());
        assert!(NormedSpace::lp(2, 0.5).is_err());
        let l3 = NormedSpace::lp(2, 3.0).unwrap();
        assert!((l3.norm(&[1.0, 1.0]).unwrap() - 2f64.powf(1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn cross_polytope_gauge() {
        let s = NormedSpace::polytope(vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]).unwrap();
        assert!((s.norm(&[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hilbert_distances() {
        let h = hilbert_distance(&NormedSpace::lp(7, 2.0).unwrap()).unwrap();
        assert_eq!((h.lower, h.upper), (1.0, 1.0));
        let h = hilbert_distance(&NormedSpace::lp(4, f64::INFINITY).unwrap()).unwrap();
        assert!((h.upper - 2.0).abs() < 1e-12);
        let q = NormedSpace::quadratic(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
        assert_eq!(hilbert_distance(&q).unwrap().upper, 1.0);
    }

    #[test]
    fn square_polytope_distance() {
        let s = NormedSpace::polytope(vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]]).unwrap();
        let h = hilbert_distance(&s).unwrap();
        assert_eq!(h.method, DistanceMethod::Mvee);
        assert!((h.upper - 2f64.sqrt()).abs() < 1e-5, "{h:?}");
        assert!(h.lower <= h.upper && h.lower >= 1.0);
        assert!(h.lower > 1.4);
    }

    #[test]
    fn quadratic_validation() {
        assert!(NormedSpace::quadratic(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
        assert!(NormedSpace::quadratic(DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0])).is_err());
    }

    #[test]
    fn subgradients_match_norm() {
        let spaces = [
            NormedSpace::lp(3, 1.0).unwrap(),
            NormedSpace::lp(3, 2.0).unwrap(),
            NormedSpace::lp(3, 3.5).unwrap(),
            NormedSpace::lp(3, f64::INFINITY).unwrap(),
            NormedSpace::quadratic(DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 3.0])).unwrap(),
        ];
        let x = [0.7, -1.3, 0.4];
        let mut g = [0.0; 3];
        for s in &spaces {
            let n = s.subgradient(&x, &mut g);
            // Euler's identity for 1-homogeneous functions: <g, x> = ‖x‖
            let ip: f64 = g.iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!((ip - n).abs() < 1e-12, "{:?}", s.kind());
            assert!((n - s.eval(&x)).abs() < 1e-12);
        }
    }
}

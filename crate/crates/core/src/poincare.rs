//! Poincaré ratios of point configurations and adversarial search for
//! configurations that maximize them.
//!
//! For a symmetric stochastic `A` and points `x_1..x_n` the ratio is
//!
//! ```text
//! ((1/n²) Σ_i Σ_j ‖x_i - x_j‖^p) / ((1/n) Σ_i Σ_j a_ij ‖x_i - x_j‖^p)
//! ```
//!
//! and every configuration gives a lower bound on `γ(A, ‖·‖^p)`.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::graphs::StochasticMatrix;
use crate::norms::NormedSpace;
use crate::optim::{OptimizerConfig, MIN_STEP};
use crate::spectral::second_eigenvalue;

/// Rows above this size are summed in parallel.
const PARALLEL_ROWS: usize = 64;

/// `n` points in `R^dim`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointConfig {
    dim: usize,
    coords: Vec<f64>,
}

impl PointConfig {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("points need positive dimension"));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(invalid(format!("{} coordinates do not form points of dimension {dim}", coords.len())));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("point coordinates must be finite"));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or_else(|| invalid("configuration needs points"))?;
        if rows.iter().any(|r| r.len() != dim) {
            return Err(invalid("points have inconsistent dimensions"));
        }
        Self::new(dim, rows.concat())
    }

    /// Points of the real line.
    pub fn line(values: &[f64]) -> Result<Self> {
        Self::new(1, values.to_vec())
    }

    pub fn n(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.coords.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn translated(&self, v: &[f64]) -> Self {
        let coords = self.coords.iter().enumerate().map(|(i, c)| c + v[i % self.dim]).collect();
        Self { dim: self.dim, coords }
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self { dim: self.dim, coords: self.coords.iter().map(|c| c * t).collect() }
    }

    /// Points reordered so that new point `i` is old point `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let coords = perm.iter().flat_map(|&i| self.point(i).iter().copied()).collect();
        Self { dim: self.dim, coords }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoincareReport {
    /// `numerator / denominator`, a lower bound on `γ(A, d^p)`.
    pub ratio: f64,
    /// `(1/n²) Σ_i Σ_j d(x_i, x_j)^p`.
    pub numerator: f64,
    /// `(1/n) Σ_i Σ_j a_ij d(x_i, x_j)^p`.
    pub denominator: f64,
    pub exponent: f64,
    /// `Σ_i Σ_j d^p / Σ_i Σ_j a_ij d^p`, which equals `n · ratio`.
    pub sum_ratio: f64,
}

fn check_inputs(a: &StochasticMatrix, space: &NormedSpace, cfg: &PointConfig, p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(invalid(format!("exponent must be positive and finite, got {p}")));
    }
    if a.n() != cfg.n() {
        return Err(invalid(format!("matrix has n = {}, configuration has {} points", a.n(), cfg.n())));
    }
    if space.dim() != cfg.dim() {
        return Err(invalid(format!("space has dimension {}, points have {}", space.dim(), cfg.dim())));
    }
    Ok(())
}

fn row_sums(a: &StochasticMatrix, space: &NormedSpace, cfg: &PointConfig, p: f64, i: usize) -> (f64, f64) {
    let xi = cfg.point(i);
    let mut all = 0.0;
    for j in 0..cfg.n() {
        if j != i {
            all += space.distance(xi, cfg.point(j)).powf(p);
        }
    }
    let mut edge = 0.0;
    for &(j, w) in a.row_support(i) {
        if j != i {
            edge += w * space.distance(xi, cfg.point(j)).powf(p);
        }
    }
    (all, edge)
}

fn sums(a: &StochasticMatrix, space: &NormedSpace, cfg: &PointConfig, p: f64) -> (f64, f64) {
    let n = cfg.n();
    let rows: Vec<(f64, f64)> = if n >= PARALLEL_ROWS {
        (0..n).into_par_iter().map(|i| row_sums(a, space, cfg, p, i)).collect()
    } else {
        (0..n).map(|i| row_sums(a, space, cfg, p, i)).collect()
    };
    // sequential reduction keeps the result independent of scheduling
    rows.iter().fold((0.0, 0.0), |(s, t), (u, v)| (s + u, t + v))
}

/// Observed Poincaré ratio of `cfg` with respect to `a` and `‖·‖^p`.
pub fn poincare_ratio(a: &StochasticMatrix, space: &NormedSpace, cfg: &PointConfig, p: f64) -> Result<PoincareReport> {
    check_inputs(a, space, cfg, p)?;
    let n = cfg.n() as f64;
    let (all, edge) = sums(a, space, cfg, p);
    if !(all.is_finite() && edge.is_finite()) {
        return Err(Error::NumericalFailure("distance sums overflowed".into()));
    }
    if all == 0.0 {
        return Err(Error::DegenerateConfiguration("all points coincide".into()));
    }
    if edge == 0.0 {
        return Err(Error::DisconnectedSupport);
    }
    let numerator = all / (n * n);
    let denominator = edge / n;
    Ok(PoincareReport { ratio: numerator / denominator, numerator, denominator, exponent: p, sum_ratio: all / edge })
}

/// `1 / (1 - λ₂(a))`, the exact value of `γ(A, |·|²)` on the real line.
pub fn gamma_line_exact(a: &StochasticMatrix) -> Result<f64> {
    let lambda2 = second_eigenvalue(a)?;
    if lambda2 >= 1.0 - 1e-12 {
        return Err(Error::DisconnectedMatrix(lambda2));
    }
    Ok(1.0 / (1.0 - lambda2))
}

/// Subtracts the centroid and rescales to unit pairs-RMS,
/// `(1/n²) Σ_i Σ_j ‖x_i - x_j‖² = 1`. Returns false when all points coincide.
pub(crate) fn center_and_normalize(space: &NormedSpace, x: &mut [f64], dim: usize) -> bool {
    let n = x.len() / dim;
    for c in 0..dim {
        let mean = (0..n).map(|i| x[i * dim + c]).sum::<f64>() / n as f64;
        (0..n).for_each(|i| x[i * dim + c] -= mean);
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            total += 2.0 * space.distance(&x[i * dim..(i + 1) * dim], &x[j * dim..(j + 1) * dim]).powi(2);
        }
    }
    let rms = (total / (n * n) as f64).sqrt();
    if !(rms > 0.0 && rms.is_finite()) {
        return false;
    }
    x.iter_mut().for_each(|v| *v /= rms);
    true
}

/// Gradient of `log(ratio)` with respect to the coordinates.
fn log_ratio_gradient(a: &StochasticMatrix, space: &NormedSpace, x: &[f64], dim: usize, p: f64) -> Vec<f64> {
    let n = x.len() / dim;
    let pt = |i: usize| &x[i * dim..(i + 1) * dim];
    let mut all = 0.0;
    let mut edge = 0.0;
    let mut g_all = vec![0.0; x.len()];
    let mut g_edge = vec![0.0; x.len()];
    let mut z = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    for i in 0..n {
        for j in (i + 1)..n {
            let w = a.get(i, j);
            z.iter_mut().zip(pt(i).iter().zip(pt(j))).for_each(|(zc, (u, v))| *zc = u - v);
            let d = space.subgradient(&z, &mut g);
            if d == 0.0 {
                continue;
            }
            let dp = d.powf(p);
            let scale = p * d.powf(p - 1.0);
            all += 2.0 * dp;
            edge += 2.0 * w * dp;
            for c in 0..dim {
                let v = 2.0 * scale * g[c];
                g_all[i * dim + c] += v;
                g_all[j * dim + c] -= v;
                if w != 0.0 {
                    g_edge[i * dim + c] += w * v;
                    g_edge[j * dim + c] -= w * v;
                }
            }
        }
    }
    g_all.iter().zip(&g_edge).map(|(u, v)| u / all - v / edge).collect()
}

struct Ascent {
    coords: Vec<f64>,
    ratio: f64,
}

fn ascend(
    a: &StochasticMatrix,
    space: &NormedSpace,
    p: f64,
    mut x: Vec<f64>,
    opt: &OptimizerConfig,
) -> Result<Ascent> {
    let dim = space.dim();
    if !center_and_normalize(space, &mut x, dim) {
        return Err(Error::DegenerateConfiguration("starting points coincide".into()));
    }
    let cfg = PointConfig { dim, coords: x };
    let mut ratio = poincare_ratio(a, space, &cfg, p)?.ratio;
    let mut x = cfg.coords;
    let mut step = opt.step_size;
    let mut grad = log_ratio_gradient(a, space, &x, dim, p);
    for _ in 0..opt.steps {
        let gnorm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(gnorm > 0.0) {
            if gnorm.is_nan() {
                return Err(Error::NumericalFailure("gradient is not finite".into()));
            }
            break;
        }
        let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = step * xnorm / gnorm;
        let mut trial: Vec<f64> = x.iter().zip(&grad).map(|(u, g)| u + scale * g).collect();
        if trial.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure("iterate is not finite".into()));
        }
        let accepted = if center_and_normalize(space, &mut trial, dim) {
            let cfg = PointConfig { dim, coords: trial };
            match poincare_ratio(a, space, &cfg, p) {
                Ok(r) if r.ratio > ratio => Some((cfg.coords, r.ratio)),
                Ok(_) | Err(Error::DegenerateConfiguration(_)) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        match accepted {
            Some((coords, r)) => {
                let stalled = r - ratio <= opt.tolerance * ratio;
                x = coords;
                ratio = r;
                grad = log_ratio_gradient(a, space, &x, dim, p);
                step *= if stalled { opt.shrink } else { opt.growth };
            }
            None => step *= opt.shrink,
        }
        if step < MIN_STEP {
            break;
        }
    }
    Ok(Ascent { coords: x, ratio })
}

/// Multi-restart gradient ascent on the Poincaré ratio.
///
/// Restart 0 starts from `initial` when given; all others from independent
/// Gaussian configurations. Iterates are centered and rescaled to unit
/// pairs-RMS after every step. The winner is the largest ratio, ties going
/// to the lowest restart index, so the result does not depend on thread
/// count.
pub fn maximize_poincare_ratio(
    a: &StochasticMatrix,
    space: &NormedSpace,
    p: f64,
    opt: &OptimizerConfig,
    initial: Option<&PointConfig>,
) -> Result<(PointConfig, PoincareReport)> {
    opt.validate()?;
    if !(p > 0.0 && p.is_finite()) {
        return Err(invalid(format!("exponent must be positive and finite, got {p}")));
    }
    let n = a.n();
    if n < 2 {
        return Err(invalid("the ratio needs at least two points"));
    }
    if !a.support_connected() {
        return Err(Error::DisconnectedMatrix(1.0));
    }
    if let Some(cfg) = initial {
        check_inputs(a, space, cfg, p)?;
    }
    let dim = space.dim();
    let runs: Vec<Result<Ascent>> = (0..opt.restarts)
        .into_par_iter()
        .map(|r| {
            let start = match (r, initial) {
                (0, Some(cfg)) => cfg.coords.clone(),
                _ => {
                    let mut rng = opt.restart_rng(r);
                    (0..n * dim).map(|_| StandardNormal.sample(&mut rng)).collect()
                }
            };
            ascend(a, space, p, start, opt)
        })
        .collect();
    let mut best: Option<Ascent> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.ratio > b.ratio) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    let cfg = PointConfig { dim, coords: best.coords };
    let report = poincare_ratio(a, space, &cfg, p)?;
    Ok((cfg, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::*;
    use crate::spectral::second_eigenpair;
    use nalgebra::DMatrix;
    use std::f64::consts::PI;

    fn k2() -> StochasticMatrix {
        StochasticMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap()
    }

    #[test]
    fn two_point_identity() {
        let r = poincare_ratio(&k2(), &NormedSpace::real_line(), &PointConfig::line(&[0.3, 2.0]).unwrap(), 2.0).unwrap();
        assert!((r.ratio - 0.5).abs() < 1e-15);
        assert!((r.sum_ratio - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cycle_eigenvector_config() {
        let a = normalized_adjacency(&cycle_graph(6).unwrap());
        let t: Vec<f64> = (0..6).map(|i| (2.0 * PI * i as f64 / 6.0).cos()).collect();
        let r = poincare_ratio(&a, &NormedSpace::real_line(), &PointConfig::line(&t).unwrap(), 2.0).unwrap();
        assert!((r.ratio - 2.0).abs() < 1e-9);
        assert!((r.ratio - r.numerator / r.denominator).abs() < 1e-12 * r.ratio);
    }

    #[test]
    fn gamma_line_examples() {
        assert!((gamma_line_exact(&normalized_adjacency(&cycle_graph(4).unwrap())).unwrap() - 1.0).abs() < 1e-12);
        assert!((gamma_line_exact(&k2()).unwrap() - 0.5).abs() < 1e-12);
        assert!((gamma_line_exact(&normalized_adjacency(&cycle_graph(6).unwrap())).unwrap() - 2.0).abs() < 1e-9);
        let two = block_diagonal(&k2(), &k2());
        assert!(matches!(gamma_line_exact(&two), Err(Error::DisconnectedMatrix(_))));
    }

    #[test]
    fn degenerate_and_disconnected_support() {
        let a = block_diagonal(&k2(), &k2());
        let line = NormedSpace::real_line();
        let same = PointConfig::line(&[1.0; 4]).unwrap();
        assert!(matches!(poincare_ratio(&a, &line, &same, 2.0), Err(Error::DegenerateConfiguration(_))));
        let split = PointConfig::line(&[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(matches!(poincare_ratio(&a, &line, &split, 2.0), Err(Error::DisconnectedSupport)));
    }

    #[test]
    fn scale_and_translation_invariance() {
        let a = random_stochastic_matrix(7, 3).unwrap();
        let space = NormedSpace::lp(2, 1.5).unwrap();
        let cfg = PointConfig::new(2, (0..14).map(|i| ((i * 37 % 11) as f64).sin()).collect()).unwrap();
        let base = poincare_ratio(&a, &space, &cfg, 1.7).unwrap();
        let moved = poincare_ratio(&a, &space, &cfg.translated(&[3.0, -1.0]).scaled(-2.5), 1.7).unwrap();
        assert!((base.ratio - moved.ratio).abs() < 1e-12 * base.ratio);
    }

    #[test]
    fn maximizer_on_line_reaches_gamma() {
        let a = normalized_adjacency(&cycle_graph(8).unwrap());
        let exact = gamma_line_exact(&a).unwrap();
        let opt = OptimizerConfig { restarts: 4, ..OptimizerConfig::with_seed(9) };
        let (_, r) = maximize_poincare_ratio(&a, &NormedSpace::real_line(), 2.0, &opt, None).unwrap();
        assert!(r.ratio >= 0.99 * exact && r.ratio <= exact + 1e-6, "{} vs {exact}", r.ratio);
    }

    #[test]
    fn maximizer_in_hilbert_space_bounded_by_line_value() {
        let a = normalized_adjacency(&hypercube_graph(3).unwrap());
        let exact = gamma_line_exact(&a).unwrap();
        let space = NormedSpace::quadratic(DMatrix::identity(3, 3)).unwrap();
        let opt = OptimizerConfig { restarts: 3, steps: 500, ..OptimizerConfig::with_seed(2) };
        let (_, r) = maximize_poincare_ratio(&a, &space, 2.0, &opt, None).unwrap();
        assert!(r.ratio >= 0.99 * exact && r.ratio <= exact + 1e-6, "{} vs {exact}", r.ratio);
        // eigenvector placed on one coordinate attains the line value
        let (_, v) = second_eigenpair(&a).unwrap();
        let coords: Vec<f64> = v.iter().flat_map(|&t| [t, 0.0, 0.0]).collect();
        let r = poincare_ratio(&a, &space, &PointConfig::new(3, coords).unwrap(), 2.0).unwrap();
        assert!((r.ratio - exact).abs() < 1e-9);
    }

    #[test]
    fn maximizer_two_points_any_space() {
        let space = NormedSpace::lp(3, f64::INFINITY).unwrap();
        let opt = OptimizerConfig { restarts: 2, steps: 50, ..OptimizerConfig::default() };
        let (_, r) = maximize_poincare_ratio(&k2(), &space, 1.3, &opt, None).unwrap();
        assert!((r.ratio - 0.5).abs() < 1e-12);
    }

    #[test]
    fn maximizer_is_deterministic() {
        let a = random_stochastic_matrix(6, 11).unwrap();
        let space = NormedSpace::lp(2, 1.0).unwrap();
        let opt = OptimizerConfig { restarts: 4, steps: 200, ..OptimizerConfig::with_seed(5) };
        let (c1, r1) = maximize_poincare_ratio(&a, &space, 2.0, &opt, None).unwrap();
        let (c2, r2) = maximize_poincare_ratio(&a, &space, 2.0, &opt, None).unwrap();
        assert_eq!(c1, c2);
        assert_eq!(r1.ratio, r2.ratio);
    }
}

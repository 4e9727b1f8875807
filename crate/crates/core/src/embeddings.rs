//! Embeddings of finite metrics into normed spaces: evaluation, the Fréchet
//! and simplex baselines, and a multi-restart distortion optimizer.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graphs::StochasticMatrix;
use crate::metrics::FiniteMetric;
use crate::norms::NormedSpace;
use crate::optim::{OptimizerConfig, MIN_STEP};
use crate::poincare::{center_and_normalize, maximize_poincare_ratio, PointConfig};

pub const TEMPERATURE_START: f64 = 1.0;
pub const TEMPERATURE_END: f64 = 1e-3;
const JITTER: f64 = 1e-8;

/// A map from the points of `source` to `image`, which lives in `space`.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub source: FiniteMetric,
    pub space: NormedSpace,
    pub image: PointConfig,
}

impl Embedding {
    pub fn new(source: FiniteMetric, space: NormedSpace, image: PointConfig) -> Result<Self> {
        if source.n() != image.n() {
            return Err(invalid(format!("metric has {} points, image has {}", source.n(), image.n())));
        }
        if space.dim() != image.dim() {
            return Err(invalid(format!("space has dimension {}, image points have {}", space.dim(), image.dim())));
        }
        Ok(Self { source, space, image })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddingReport {
    /// `max ‖f(i) - f(j)‖ / d(i, j)`.
    pub lipschitz: f64,
    /// `max d(i, j) / ‖f(i) - f(j)‖`; infinite when two images coincide.
    pub contraction: f64,
    pub distortion: f64,
    /// Lipschitz constant after rescaling so that `ΣΣ ‖f(i) - f(j)‖ = ΣΣ d(i, j)`.
    pub average_distortion: f64,
    /// `sqrt((1/n) Σ_i Σ_j a_ij ‖f(i) - f(j)‖²)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_rms: Option<f64>,
    /// `sqrt((1/n²) Σ_i Σ_j ‖f(i) - f(j)‖²)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs_rms: Option<f64>,
}

impl EmbeddingReport {
    /// `(pairs_rms / edge_rms)²`, the 2-Poincaré ratio of the image.
    pub fn poincare_ratio(&self) -> Option<f64> {
        match (self.pairs_rms, self.edge_rms) {
            (Some(p), Some(e)) if e > 0.0 => Some((p / e).powi(2)),
            _ => None,
        }
    }
}

/// Computes every report field; coincident images give infinite
/// contraction and distortion rather than an error.
pub fn evaluate_embedding(e: &Embedding, a: Option<&StochasticMatrix>) -> Result<EmbeddingReport> {
    let n = e.source.n();
    if let Some(a) = a {
        if a.n() != n {
            return Err(invalid(format!("matrix has n = {}, embedding has {n} points", a.n())));
        }
    }
    let mut lipschitz = 0.0_f64;
    let mut contraction = 0.0_f64;
    let mut image_sum = 0.0;
    let mut source_sum = 0.0;
    let mut pairs_sq = 0.0;
    let mut edge_sq = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = e.source.dist(i, j);
            let f = e.space.distance(e.image.point(i), e.image.point(j));
            lipschitz = lipschitz.max(f / d);
            contraction = contraction.max(if f > 0.0 { d / f } else { f64::INFINITY });
            image_sum += f;
            source_sum += d;
            pairs_sq += 2.0 * f * f;
            if let Some(a) = a {
                edge_sq += 2.0 * a.get(i, j) * f * f;
            }
        }
    }
    let average_distortion = if image_sum > 0.0 { lipschitz * source_sum / image_sum } else { f64::INFINITY };
    let n2 = (n * n) as f64;
    Ok(EmbeddingReport {
        lipschitz,
        contraction,
        distortion: lipschitz * contraction,
        average_distortion,
        edge_rms: a.map(|_| (edge_sq / n as f64).sqrt()),
        pairs_rms: a.map(|_| (pairs_sq / n2).sqrt()),
    })
}

/// `f(i) = (d(i, 0), ..., d(i, n-2))` in `ℓ_∞^{n-1}`, an isometry.
pub fn frechet_embedding(m: &FiniteMetric) -> Result<Embedding> {
    let n = m.n();
    if n < 2 {
        return Err(invalid("Fréchet embedding needs at least two points"));
    }
    let dim = n - 1;
    let coords = (0..n).flat_map(|i| (0..dim).map(move |k| (i, k))).map(|(i, k)| m.dist(i, k)).collect();
    Embedding::new(m.clone(), NormedSpace::lp(dim, f64::INFINITY)?, PointConfig::new(dim, coords)?)
}

/// `f(i) = (diam/√2) e_i` in `ℓ_2^n`: all image distances equal the
/// diameter. Requires every positive distance to be at least 1.
pub fn simplex_embedding(m: &FiniteMetric) -> Result<Embedding> {
    let n = m.n();
    if n >= 2 && m.min_positive_distance() < 1.0 {
        return Err(Error::Normalization(format!(
            "smallest distance is {}, rescale the metric so it is at least 1",
            m.min_positive_distance()
        )));
    }
    let s = m.diameter() / std::f64::consts::SQRT_2;
    let coords = (0..n * n).map(|t| if t / n == t % n { s } else { 0.0 }).collect();
    Embedding::new(m.clone(), NormedSpace::lp(n, 2.0)?, PointConfig::new(n, coords)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Minimize bi-Lipschitz distortion.
    Distortion,
    /// Minimize average distortion.
    #[serde(alias = "avg")]
    AverageDistortion,
    /// Maximize pairs-RMS subject to edge-RMS <= 1.
    #[serde(alias = "ratio")]
    PairsRmsSubjectToEdgeRms,
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distortion" => Ok(Self::Distortion),
            "avg" | "average_distortion" => Ok(Self::AverageDistortion),
            "ratio" | "pairs_rms_subject_to_edge_rms" => Ok(Self::PairsRmsSubjectToEdgeRms),
            other => Err(invalid(format!("unknown objective '{other}'"))),
        }
    }
}

fn temperature(step: usize, steps: usize) -> f64 {
    if steps <= 1 {
        return TEMPERATURE_END;
    }
    let t = step as f64 / (steps - 1) as f64;
    TEMPERATURE_START * (TEMPERATURE_END / TEMPERATURE_START).powf(t)
}

/// `T log Σ exp(v / T)` and its softmax weights.
fn log_sum_exp(values: &[f64], t: f64) -> (f64, Vec<f64>) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = values.iter().map(|v| ((v - max) / t).exp()).collect();
    let total: f64 = w.iter().sum();
    (max + t * total.ln(), w.into_iter().map(|x| x / total).collect())
}

struct PairData {
    pairs: Vec<(usize, usize)>,
    /// `log(‖f(i) - f(j)‖ / d(i, j))` per pair.
    log_ratio: Vec<f64>,
    dist: Vec<f64>,
    /// Subgradient of the norm at `f(i) - f(j)`, row-major per pair.
    subgrad: Vec<f64>,
}

fn pair_data(m: &FiniteMetric, space: &NormedSpace, x: &[f64]) -> Option<PairData> {
    let n = m.n();
    let dim = space.dim();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let mut log_ratio = Vec::with_capacity(pairs.len());
    let mut dist = Vec::with_capacity(pairs.len());
    let mut subgrad = vec![0.0; pairs.len() * dim];
    let mut z = vec![0.0; dim];
    for (p, &(i, j)) in pairs.iter().enumerate() {
        for c in 0..dim {
            z[c] = x[i * dim + c] - x[j * dim + c];
        }
        let f = space.subgradient(&z, &mut subgrad[p * dim..(p + 1) * dim]);
        if !(f > 0.0) {
            return None;
        }
        log_ratio.push((f / m.dist(i, j)).ln());
        dist.push(f);
    }
    Some(PairData { pairs, log_ratio, dist, subgrad })
}

/// Smoothed log-objective and its gradient in the coordinates.
fn smoothed(objective: Objective, m: &FiniteMetric, space: &NormedSpace, x: &[f64], t: f64) -> Option<(f64, Vec<f64>)> {
    let dim = space.dim();
    let data = pair_data(m, space, x)?;
    let (up, w_up) = log_sum_exp(&data.log_ratio, t);
    // weight on d log r_ij for each pair
    let (value, weights): (f64, Vec<f64>) = match objective {
        Objective::Distortion => {
            let neg: Vec<f64> = data.log_ratio.iter().map(|v| -v).collect();
            let (down, w_down) = log_sum_exp(&neg, t);
            (up + down, w_up.iter().zip(&w_down).map(|(a, b)| a - b).collect())
        }
        Objective::AverageDistortion => {
            let image: f64 = data.dist.iter().sum();
            let source: f64 = data.pairs.iter().map(|&(i, j)| m.dist(i, j)).sum();
            let value = up + source.ln() - image.ln();
            // d(-log Σ f_ij) / d log r_ij = -f_ij / Σ f
            (value, w_up.iter().zip(&data.dist).map(|(w, f)| w - f / image).collect())
        }
        Objective::PairsRmsSubjectToEdgeRms => unreachable!("handled by the Poincaré ascent"),
    };
    let mut grad = vec![0.0; x.len()];
    for (p, &(i, j)) in data.pairs.iter().enumerate() {
        let coef = weights[p] / data.dist[p];
        if coef == 0.0 {
            continue;
        }
        for c in 0..dim {
            let g = coef * data.subgrad[p * dim + c];
            grad[i * dim + c] += g;
            grad[j * dim + c] -= g;
        }
    }
    Some((value, grad))
}

fn true_value(objective: Objective, e: &Embedding) -> Result<f64> {
    let r = evaluate_embedding(e, None)?;
    Ok(match objective {
        Objective::Distortion => r.distortion,
        Objective::AverageDistortion => r.average_distortion,
        Objective::PairsRmsSubjectToEdgeRms => unreachable!(),
    })
}

fn jitter<R: Rng>(x: &mut [f64], rng: &mut R) {
    x.iter_mut().for_each(|v| { let z: f64 = StandardNormal.sample(rng); *v += JITTER * z });
}

fn descend(
    objective: Objective,
    m: &FiniteMetric,
    space: &NormedSpace,
    opt: &OptimizerConfig,
    restart: usize,
) -> Result<(Vec<f64>, f64)> {
    let dim = space.dim();
    let n = m.n();
    let mut rng = opt.restart_rng(restart);
    let mut x: Vec<f64> = (0..n * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut guard = 0;
    while pair_data(m, space, &x).is_none() || !center_and_normalize(space, &mut x, dim) {
        jitter(&mut x, &mut rng);
        guard += 1;
        if guard > 100 {
            return Err(Error::NumericalFailure("could not separate starting points".into()));
        }
    }
    let eval = |x: &[f64]| -> Result<f64> {
        let e = Embedding { source: m.clone(), space: space.clone(), image: PointConfig::new(dim, x.to_vec())? };
        true_value(objective, &e)
    };
    let mut best = (x.clone(), eval(&x)?);
    let mut step = opt.step_size;
    for s in 0..opt.steps {
        let t = temperature(s, opt.steps);
        let (value, grad) = match smoothed(objective, m, space, &x, t) {
            Some(v) => v,
            None => {
                jitter(&mut x, &mut rng);
                continue;
            }
        };
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !gnorm.is_finite() || !value.is_finite() {
            return Err(Error::NumericalFailure("optimizer produced a non-finite gradient".into()));
        }
        if gnorm == 0.0 {
            break;
        }
        let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = step * xnorm / gnorm;
        let mut trial: Vec<f64> = x.iter().zip(&grad).map(|(u, g)| u - scale * g).collect();
        if !center_and_normalize(space, &mut trial, dim) {
            step *= opt.shrink;
            continue;
        }
        match smoothed(objective, m, space, &trial, t) {
            Some((tv, _)) if tv < value => {
                let stalled = value - tv <= opt.tolerance * value.abs().max(1e-300);
                x = trial;
                step *= if stalled { opt.shrink } else { opt.growth };
                let v = eval(&x)?;
                if v < best.1 {
                    best = (x.clone(), v);
                }
            }
            Some(_) => step *= opt.shrink,
            None => {
                // coincident images: perturb and keep going
                jitter(&mut trial, &mut rng);
                step *= opt.shrink;
            }
        }
        if step < MIN_STEP {
            break;
        }
    }
    Ok(best)
}

/// Multi-restart optimization of an embedding of `m` into `space`.
///
/// The two distortion objectives run gradient descent on a log-sum-exp
/// smoothing of the max-ratios with temperature annealed from 1 to 1e-3,
/// tracking the best unsmoothed value seen. The constrained objective is the
/// 2-Poincaré ascent with the result rescaled to edge-RMS 1; it needs `a`.
/// Winners are chosen by (objective value, restart index).
pub fn optimize_embedding(
    m: &FiniteMetric,
    space: &NormedSpace,
    objective: Objective,
    a: Option<&StochasticMatrix>,
    opt: &OptimizerConfig,
) -> Result<(Embedding, EmbeddingReport)> {
    opt.validate()?;
    let n = m.n();
    let dim = space.dim();
    if let Some(a) = a {
        if a.n() != n {
            return Err(invalid(format!("matrix has n = {}, metric has {n} points", a.n())));
        }
    }
    if n < 2 {
        return Err(invalid("embedding optimization needs at least two points"));
    }
    let image = match objective {
        Objective::PairsRmsSubjectToEdgeRms => {
            let a = a.ok_or_else(|| invalid("the constrained objective needs a stochastic matrix"))?;
            let (cfg, report) = maximize_poincare_ratio(a, space, 2.0, opt, None)?;
            // edge_rms² equals the denominator; scale it to 1
            cfg.scaled(1.0 / report.denominator.sqrt())
        }
        _ => {
            let runs: Vec<Result<(Vec<f64>, f64)>> =
                (0..opt.restarts).into_par_iter().map(|r| descend(objective, m, space, opt, r)).collect();
            let mut best: Option<(Vec<f64>, f64)> = None;
            for run in runs {
                let run = run?;
                if best.as_ref().is_none_or(|b| run.1 < b.1) {
                    best = Some(run);
                }
            }
            let cfg = PointConfig::new(dim, best.expect("at least one restart").0)?;
            let e = Embedding { source: m.clone(), space: space.clone(), image: cfg };
            let r = evaluate_embedding(&e, None)?;
            // report noncontractive (distortion) or pair-sum matched (average) scaling
            let s = match objective {
                Objective::Distortion => r.contraction,
                _ => r.average_distortion / r.lipschitz,
            };
            if s.is_finite() && s > 0.0 {
                e.image.scaled(s)
            } else {
                e.image
            }
        }
    };
    let e = Embedding::new(m.clone(), space.clone(), image)?;
    let report = evaluate_embedding(&e, a)?;
    Ok((e, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::*;
    use crate::metrics::shortest_path_metric;
    use nalgebra::DMatrix;

    fn c4() -> FiniteMetric {
        shortest_path_metric(&cycle_graph(4).unwrap()).unwrap()
    }

    #[test]
    fn square_in_the_plane() {
        let image = PointConfig::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let e = Embedding::new(c4(), NormedSpace::euclidean(2).unwrap(), image).unwrap();
        let r = evaluate_embedding(&e, None).unwrap();
        assert!((r.distortion - 2f64.sqrt()).abs() < 1e-15);
        assert!((r.contraction - 2f64.sqrt()).abs() < 1e-15);
        assert!(r.average_distortion <= r.distortion);
    }

    #[test]
    fn coincident_images_are_infinite() {
        let image = PointConfig::line(&[0.0, 1.0, 1.0, 2.0]).unwrap();
        let e = Embedding::new(c4(), NormedSpace::real_line(), image).unwrap();
        assert!(evaluate_embedding(&e, None).unwrap().distortion.is_infinite());
    }

    #[test]
    fn frechet_examples() {
        let two = FiniteMetric::new(DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 3.0, 0.0])).unwrap();
        let e = frechet_embedding(&two).unwrap();
        assert_eq!(e.image.coords(), &[0.0, 3.0]);
        for m in [c4(), shortest_path_metric(&complete_graph(3).unwrap()).unwrap()] {
            let e = frechet_embedding(&m).unwrap();
            for i in 0..m.n() {
                for j in 0..m.n() {
                    assert_eq!(e.space.distance(e.image.point(i), e.image.point(j)), m.dist(i, j));
                }
            }
            let r = evaluate_embedding(&e, None).unwrap();
            assert_eq!((r.distortion, r.average_distortion), (1.0, 1.0));
        }
    }

    #[test]
    fn simplex_examples() {
        let r = evaluate_embedding(&simplex_embedding(&c4()).unwrap(), None).unwrap();
        assert!((r.distortion - 2.0).abs() < 1e-12);
        let k5 = shortest_path_metric(&complete_graph(5).unwrap()).unwrap();
        let r = evaluate_embedding(&simplex_embedding(&k5).unwrap(), None).unwrap();
        assert!((r.distortion - 1.0).abs() < 1e-12);
        assert!(matches!(simplex_embedding(&c4().scaled(0.5).unwrap()), Err(Error::Normalization(_))));
    }

    #[test]
    fn rms_fields() {
        let a = normalized_adjacency(&cycle_graph(4).unwrap());
        let e = frechet_embedding(&c4()).unwrap();
        let r = evaluate_embedding(&e, Some(&a)).unwrap();
        assert!((r.edge_rms.unwrap() - 1.0).abs() < 1e-15);
        // pair distances 0,1,2,1 in each row: (1/16) * 4 * 6 = 1.5
        assert!((r.pairs_rms.unwrap() - 1.5f64.sqrt()).abs() < 1e-15);
        assert!((r.poincare_ratio().unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn optimizer_small_instances() {
        let opt = OptimizerConfig { restarts: 4, steps: 1500, ..OptimizerConfig::with_seed(1) };
        let (_, r) = optimize_embedding(&c4(), &NormedSpace::euclidean(2).unwrap(), Objective::Distortion, None, &opt).unwrap();
        assert!((r.distortion - 2f64.sqrt()).abs() < 1e-3, "{r:?}");
        let k3 = shortest_path_metric(&complete_graph(3).unwrap()).unwrap();
        let (_, r) = optimize_embedding(&k3, &NormedSpace::euclidean(2).unwrap(), Objective::Distortion, None, &opt).unwrap();
        assert!((r.distortion - 1.0).abs() < 1e-6, "{r:?}");
        let p3 = FiniteMetric::new(DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0])).unwrap();
        let (_, r) = optimize_embedding(&p3, &NormedSpace::real_line(), Objective::Distortion, None, &opt).unwrap();
        assert!((r.distortion - 1.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn optimizer_average_and_ratio() {
        let opt = OptimizerConfig { restarts: 3, steps: 400, ..OptimizerConfig::with_seed(4) };
        let g = hypercube_graph(3).unwrap();
        let m = shortest_path_metric(&g).unwrap();
        let a = normalized_adjacency(&g);
        let (_, r) =
            optimize_embedding(&m, &NormedSpace::euclidean(2).unwrap(), Objective::AverageDistortion, None, &opt).unwrap();
        assert!(r.average_distortion >= 1.0 && r.average_distortion <= r.distortion + 1e-12);
        let (_, r) = optimize_embedding(
            &m,
            &NormedSpace::lp(2, f64::INFINITY).unwrap(),
            Objective::PairsRmsSubjectToEdgeRms,
            Some(&a),
            &opt,
        )
        .unwrap();
        assert!((r.edge_rms.unwrap() - 1.0).abs() < 1e-9);
        assert!(r.poincare_ratio().unwrap() > 1.0);
    }
}

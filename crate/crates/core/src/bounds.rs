//! Closed-form bounds relating spectral gaps, Poincaré ratios, Euclidean
//! distance and dimension, plus their inversion into effective constants.
//!
//! Every universal constant is an explicit argument. The `ratio` argument of
//! [`dimension_lower_bound`], [`dx_lower_bound`] and [`effective_constant`] is
//! the plain ratio of double sums `Σ_i Σ_j ‖x_i - x_j‖² / Σ_i Σ_j a_ij ‖x_i - x_j‖²`,
//! i.e. [`PoincareReport::sum_ratio`](crate::poincare::PoincareReport::sum_ratio).

use std::collections::BTreeMap;
use std::f64::consts::{E, SQRT_2};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::graphs::StochasticMatrix;
use crate::norms::NormedSpace;
use crate::poincare::{poincare_ratio, PointConfig};

/// Relative width of the band treated as the boundary between two cases.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub inputs: BTreeMap<String, f64>,
    pub value: f64,
    pub constant_used: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case_taken: Option<String>,
    /// True when the case predicate sits on its threshold; `value` is then
    /// the larger of the two branches.
    pub boundary: bool,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, f64>,
}

impl BoundReport {
    fn scalar(name: &str, inputs: &[(&str, f64)], value: f64, constant: f64) -> Self {
        Self {
            name: name.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            value,
            constant_used: constant,
            case_taken: None,
            boundary: false,
            extras: BTreeMap::new(),
        }
    }
}

fn gap(lambda2: f64) -> Result<f64> {
    if lambda2.is_nan() || lambda2 < -1.0 - 1e-12 {
        return Err(invalid(format!("lambda2 = {lambda2} is not an eigenvalue of a stochastic matrix")));
    }
    if lambda2 >= 1.0 {
        return Err(Error::InfiniteBound(format!("lambda2 = {lambda2} leaves no spectral gap")));
    }
    Ok(1.0 - lambda2)
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {x}")))
    }
}

fn at_least_one(name: &str, x: f64) -> Result<f64> {
    if x >= 1.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(invalid(format!("{name} must be finite and at least 1, got {x}")))
    }
}

fn check_ratio(ratio: f64) -> Result<f64> {
    if ratio.is_nan() || ratio <= 0.0 {
        return Err(Error::DegenerateConfiguration(format!("ratio must be positive, got {ratio}")));
    }
    Ok(ratio)
}

/// `(1/2) exp(c (1 - λ₂) sqrt(ratio) / sqrt(n))`, a lower bound on the
/// dimension of any normed space holding a configuration with this ratio.
pub fn dimension_lower_bound(n: usize, lambda2: f64, ratio: f64, c: f64) -> Result<f64> {
    if n < 2 {
        return Err(invalid(format!("n must be at least 2, got {n}")));
    }
    let g = gap(lambda2)?;
    let ratio = check_ratio(ratio)?;
    let c = positive("constant", c)?;
    Ok(0.5 * (c * g / (n as f64).sqrt() * ratio.sqrt()).exp())
}

/// `(1/√2) exp((1 - λ₂) sqrt(ratio) / sqrt(α n))`, a lower bound on `d_X`.
pub fn dx_lower_bound(n: usize, lambda2: f64, ratio: f64, alpha: f64) -> Result<f64> {
    if n < 2 {
        return Err(invalid(format!("n must be at least 2, got {n}")));
    }
    let g = gap(lambda2)?;
    let ratio = check_ratio(ratio)?;
    let alpha = positive("alpha", alpha)?;
    Ok((g / (alpha * n as f64).sqrt() * ratio.sqrt()).exp() / SQRT_2)
}

/// Picks a branch of a two-case bound from `lhs` versus `threshold`;
/// within [`BOUNDARY_TOL`] of the threshold both branches are evaluated and
/// the larger is returned.
fn two_case(lhs: f64, threshold: f64, first: impl Fn() -> f64, second: impl Fn() -> f64) -> (f64, &'static str, bool) {
    if (lhs - threshold).abs() <= BOUNDARY_TOL * threshold {
        (first().max(second()), "boundary", true)
    } else if lhs < threshold {
        (first(), "case1", false)
    } else {
        (second(), "case2", false)
    }
}

/// Upper bound on `γ(A, ‖·‖²)` for a space at Euclidean distance `d_x`:
/// `κ d_x² / (1-λ₂)` when `d_x sqrt(1-λ₂) <= e`, otherwise
/// `κ (log(d_x sqrt(1-λ₂)) / (1-λ₂))²`. The extra `simple` is
/// `κ (log(√2 d_x) / (1-λ₂))²`.
pub fn hilbert_isomorph_gamma_bound(lambda2: f64, d_x: f64, kappa: f64) -> Result<BoundReport> {
    let g = gap(lambda2)?;
    let d_x = at_least_one("d_x", d_x)?;
    let kappa = positive("kappa", kappa)?;
    let lhs = d_x * g.sqrt();
    let (value, case, boundary) =
        two_case(lhs, E, || kappa * d_x * d_x / g, || kappa * (lhs.ln() / g).powi(2));
    let mut report = BoundReport::scalar("hilbert-gamma", &[("lambda2", lambda2), ("d_x", d_x)], value, kappa);
    report.case_taken = Some(case.into());
    report.boundary = boundary;
    report.extras.insert("predicate".into(), lhs);
    report.extras.insert("simple".into(), kappa * ((SQRT_2 * d_x).ln() / g).powi(2));
    Ok(report)
}

/// Upper bound on `γ(A, ‖·‖²)` from `d_x` and the `p`-smoothness constant.
///
/// With `Q = d_x^p (1-λ₂)^{1-p/2}`: `κ d_x² / (1-λ₂)` when `Q <= e s_p^p`,
/// otherwise `κ s_p² (1-λ₂)^{-2/p} log(Q / s_p^p)^{2/p}`. The second case
/// also reports `theta_opt = 1 / log(Q / s_p^p)`.
pub fn sp_gamma_bound(lambda2: f64, d_x: f64, s_p: f64, p: f64, kappa: f64) -> Result<BoundReport> {
    let g = gap(lambda2)?;
    let d_x = at_least_one("d_x", d_x)?;
    let s_p = at_least_one("s_p", s_p)?;
    if !(1.0..=2.0).contains(&p) {
        return Err(invalid(format!("p must lie in [1, 2], got {p}")));
    }
    let kappa = positive("kappa", kappa)?;
    let q = d_x.powf(p) * g.powf(1.0 - p / 2.0);
    let sp = s_p.powf(p);
    let (value, case, boundary) = two_case(
        q,
        E * sp,
        || kappa * d_x * d_x / g,
        || kappa * s_p * s_p / g.powf(2.0 / p) * (q / sp).ln().powf(2.0 / p),
    );
    let mut report = BoundReport::scalar(
        "sp-gamma",
        &[("lambda2", lambda2), ("d_x", d_x), ("s_p", s_p), ("p", p)],
        value,
        kappa,
    );
    report.case_taken = Some(case.into());
    report.boundary = boundary;
    report.extras.insert("predicate".into(), q);
    if case != "case1" {
        let theta = 1.0 / (q / sp).ln();
        debug_assert!(theta > 0.0 && theta <= 1.0 + 1e-9, "theta_opt = {theta} outside (0, 1]");
        report.extras.insert("theta_opt".into(), theta.min(1.0));
    }
    Ok(report)
}

/// `ρ (1 - λ₂) / log k`.
pub fn expander_dim_exponent(lambda2: f64, k: usize, rho: f64) -> Result<f64> {
    if k < 2 {
        return Err(invalid(format!("degree must be at least 2, got {k}")));
    }
    let g = gap(lambda2)?;
    let rho = positive("rho", rho)?;
    Ok(rho * g / (k as f64).ln())
}

/// `exp(c (1 - λ₂) diam / (4 D))`.
pub fn vertex_transitive_dim_bound(lambda2: f64, diam: f64, d_distortion: f64, c: f64) -> Result<f64> {
    let g = gap(lambda2)?;
    let diam = at_least_one("diameter", diam)?;
    if !(d_distortion >= 1.0) {
        return Err(invalid(format!("distortion must be at least 1, got {d_distortion}")));
    }
    let c = positive("constant", c)?;
    Ok((c / (4.0 * d_distortion) * g * diam).exp())
}

/// `diam / log(2 d_x)`.
pub fn distortion_lower_vs_dx(diam: f64, d_x: f64) -> Result<f64> {
    let diam = at_least_one("diameter", diam)?;
    let d_x = at_least_one("d_x", d_x)?;
    Ok(diam / (2.0 * d_x).ln())
}

/// `log(2 dim) sqrt(n) / ((1 - λ₂) sqrt(ratio))`: the constant that makes
/// [`dimension_lower_bound`] hold with equality at `dim`.
pub fn effective_constant(dim: usize, n: usize, lambda2: f64, ratio: f64) -> Result<f64> {
    if dim == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if n < 2 {
        return Err(invalid(format!("n must be at least 2, got {n}")));
    }
    let g = gap(lambda2)?;
    let ratio = check_ratio(ratio)?;
    Ok((2.0 * dim as f64).ln() * (n as f64).sqrt() / (g * ratio.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub p: f64,
    /// `p`-Poincaré ratio with the `(1/n) Σ a_ij` edge average.
    pub ratio: f64,
    pub root: f64,
    /// `ratio^{1/p} / p`.
    pub normalized: f64,
    /// Same ratio with the unweighted average over support edges `i < j`.
    pub edge_set_ratio: f64,
    pub edge_set_normalized: f64,
}

/// Extrapolation profile of a configuration on the real line across `p`.
pub fn matousek_extrapolation_profile(a: &StochasticMatrix, cfg: &PointConfig, p_list: &[f64]) -> Result<Vec<ProfileRow>> {
    if cfg.dim() != 1 {
        return Err(invalid(format!("profile needs points on the line, got dimension {}", cfg.dim())));
    }
    let line = NormedSpace::real_line();
    let n = cfg.n();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| a.row_support(i).iter().filter(move |&&(j, _)| j > i).map(move |&(j, _)| (i, j)))
        .collect();
    let t = cfg.coords();
    p_list
        .iter()
        .map(|&p| {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(invalid(format!("profile exponents must be finite and at least 1, got {p}")));
            }
            let report = poincare_ratio(a, &line, cfg, p)?;
            let edge_avg = pairs.iter().map(|&(i, j)| (t[i] - t[j]).abs().powf(p)).sum::<f64>() / pairs.len() as f64;
            let edge_set_ratio = report.numerator / edge_avg;
            Ok(ProfileRow {
                p,
                ratio: report.ratio,
                root: report.ratio.powf(1.0 / p),
                normalized: report.ratio.powf(1.0 / p) / p,
                edge_set_ratio,
                edge_set_normalized: edge_set_ratio.powf(1.0 / p) / p,
            })
        })
        .collect()
}

/// Names accepted by [`evaluate_named`].
pub const BOUND_NAMES: [&str; 8] =
    ["dim", "dx", "hilbert-gamma", "sp-gamma", "expander-exp", "vt-dim", "distortion-dx", "c-eff"];

fn input(inputs: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    inputs.get(key).copied().ok_or_else(|| invalid(format!("missing input '{key}'")))
}

fn count(inputs: &BTreeMap<String, f64>, key: &str) -> Result<usize> {
    let x = input(inputs, key)?;
    if x >= 0.0 && x.fract() == 0.0 && x <= 1e15 {
        Ok(x as usize)
    } else {
        Err(invalid(format!("input '{key}' must be a nonnegative integer, got {x}")))
    }
}

/// Evaluates a bound by name from a map of named inputs. The universal
/// constant defaults to 1.
pub fn evaluate_named(name: &str, inputs: &BTreeMap<String, f64>, constant: Option<f64>) -> Result<BoundReport> {
    let c = constant.unwrap_or(1.0);
    let pick = |keys: &[&'static str]| -> Result<Vec<(&'static str, f64)>> {
        keys.iter()
            .map(|&k| input(inputs, k).map(|v| (k, v)))
            .collect()
    };
    let report = match name {
        "dim" => {
            let v = dimension_lower_bound(count(inputs, "n")?, input(inputs, "lambda2")?, input(inputs, "ratio")?, c)?;
            BoundReport::scalar(name, &pick(&["n", "lambda2", "ratio"])?, v, c)
        }
        "dx" => {
            let v = dx_lower_bound(count(inputs, "n")?, input(inputs, "lambda2")?, input(inputs, "ratio")?, c)?;
            BoundReport::scalar(name, &pick(&["n", "lambda2", "ratio"])?, v, c)
        }
        "hilbert-gamma" => hilbert_isomorph_gamma_bound(input(inputs, "lambda2")?, input(inputs, "d_x")?, c)?,
        "sp-gamma" => sp_gamma_bound(
            input(inputs, "lambda2")?,
            input(inputs, "d_x")?,
            input(inputs, "s_p")?,
            input(inputs, "p")?,
            c,
        )?,
        "expander-exp" => {
            let v = expander_dim_exponent(input(inputs, "lambda2")?, count(inputs, "k")?, c)?;
            BoundReport::scalar(name, &pick(&["lambda2", "k"])?, v, c)
        }
        "vt-dim" => {
            let v = vertex_transitive_dim_bound(
                input(inputs, "lambda2")?,
                input(inputs, "diam")?,
                input(inputs, "d_distortion")?,
                c,
            )?;
            BoundReport::scalar(name, &pick(&["lambda2", "diam", "d_distortion"])?, v, c)
        }
        "distortion-dx" => {
            let v = distortion_lower_vs_dx(input(inputs, "diam")?, input(inputs, "d_x")?)? * c;
            BoundReport::scalar(name, &pick(&["diam", "d_x"])?, v, c)
        }
        "c-eff" => {
            let v = effective_constant(
                count(inputs, "dim")?,
                count(inputs, "n")?,
                input(inputs, "lambda2")?,
                input(inputs, "ratio")?,
            )?;
            BoundReport::scalar(name, &pick(&["dim", "n", "lambda2", "ratio"])?, v, 1.0)
        }
        other => {
            return Err(invalid(format!("unknown bound '{other}'; expected one of {}", BOUND_NAMES.join(", "))))
        }
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn dimension_examples() {
        assert!(close(dimension_lower_bound(4, 0.0, 1.0, 1.0).unwrap(), 0.5 * 0.5f64.exp(), 1e-15));
        assert!(close(dimension_lower_bound(4, 0.0, 1e-300, 1.0).unwrap(), 0.5, 1e-12));
        assert!(close(dimension_lower_bound(6, 0.5, 2.0, 1.0).unwrap(), 0.667_329_037, 1e-9));
        assert!(matches!(dimension_lower_bound(4, 1.0, 1.0, 1.0), Err(Error::InfiniteBound(_))));
        assert!(matches!(dimension_lower_bound(4, 0.0, 0.0, 1.0), Err(Error::DegenerateConfiguration(_))));
    }

    #[test]
    fn dx_examples() {
        assert!(close(dx_lower_bound(4, 0.0, 1.0, 1.0).unwrap(), 1.165_822, 1e-6));
        assert!(close(dx_lower_bound(4, 0.0, 1e-300, 1.0).unwrap(), 1.0 / SQRT_2, 1e-12));
        assert!(close(dx_lower_bound(6, 0.5, 2.0, 1.0).unwrap(), 0.943_745_775, 1e-9));
    }

    #[test]
    fn hilbert_gamma_examples() {
        let r = hilbert_isomorph_gamma_bound(0.0, 1.0, 1.0).unwrap();
        assert_eq!(r.case_taken.as_deref(), Some("case1"));
        assert!(close(r.value, 1.0, 1e-15));
        assert!(close(r.extras["simple"], SQRT_2.ln().powi(2), 1e-15));
        let r = hilbert_isomorph_gamma_bound(0.0, 100.0, 1.0).unwrap();
        assert_eq!(r.case_taken.as_deref(), Some("case2"));
        assert!(close(r.value, 21.2076, 1e-5));
        assert!(close(hilbert_isomorph_gamma_bound(-1.0, 1.0, 1.0).unwrap().value, 0.5, 1e-15));
    }

    #[test]
    fn sp_gamma_second_case() {
        let r = sp_gamma_bound(0.0, E * E, 1.0, 2.0, 1.0).unwrap();
        assert_eq!(r.case_taken.as_deref(), Some("case2"));
        assert!(close(r.value, 4.0, 1e-12));
        // Q = d_x^p = e^4, so theta_opt = 1 / log(e^4)
        assert!(close(r.extras["theta_opt"], 0.25, 1e-12));
    }

    #[test]
    fn sp_gamma_boundary_takes_max() {
        // d_x = e with p = 1, s_p = 1, lambda2 = 0 sits exactly on the threshold
        let r = sp_gamma_bound(0.0, E, 1.0, 1.0, 1.0).unwrap();
        assert!(r.boundary);
        assert!(close(r.value, E * E, 1e-12));
    }

    #[test]
    fn scalar_examples() {
        assert!(close(expander_dim_exponent(0.5, 4, 1.0).unwrap(), 0.360_674, 1e-5));
        assert!(expander_dim_exponent(0.5, 1, 1.0).is_err());
        assert!(close(vertex_transitive_dim_bound(0.0, 4.0, 1.0, 1.0).unwrap(), E, 1e-15));
        assert!(close(vertex_transitive_dim_bound(1.0 / 3.0, 3.0, 1.0, 1.0).unwrap(), 0.5f64.exp(), 1e-15));
        assert!(close(vertex_transitive_dim_bound(0.0, 4.0, 1e12, 1.0).unwrap(), 1.0, 1e-9));
        assert!(close(distortion_lower_vs_dx(10.0, 1.0).unwrap(), 14.426_95, 1e-6));
        assert!(close(distortion_lower_vs_dx(7.0, E / 2.0).unwrap(), 7.0, 1e-15));
        assert!(close(distortion_lower_vs_dx(6.0, 2.0).unwrap(), 4.328_085, 1e-6));
    }

    #[test]
    fn effective_constant_examples() {
        assert!(close(effective_constant(1, 4, 0.0, 1.0).unwrap(), 2.0 * 2f64.ln(), 1e-15));
        let a = effective_constant(3, 10, 0.2, 1.5).unwrap();
        let b = effective_constant(3, 10, 0.2, 6.0).unwrap();
        assert!(close(b, a / 2.0, 1e-15));
        assert!(close(effective_constant(1, 6, 0.5, 2.0).unwrap(), 2.401, 1e-3));
        let c = effective_constant(5, 40, 0.3, 7.0).unwrap();
        assert!(close(dimension_lower_bound(40, 0.3, 7.0, c).unwrap(), 5.0, 1e-9));
    }

    #[test]
    fn profile_two_points_and_cycle() {
        let k2 = StochasticMatrix::new(nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let rows = matousek_extrapolation_profile(&k2, &PointConfig::line(&[0.0, 3.0]).unwrap(), &[1.0, 2.0, 5.0]).unwrap();
        for r in &rows {
            assert!(close(r.ratio, 0.5, 1e-15));
            assert!(close(r.normalized, 0.5f64.powf(1.0 / r.p) / r.p, 1e-15));
        }
        let c6 = normalized_adjacency(&cycle_graph(6).unwrap());
        let t: Vec<f64> = (0..6).map(|i| (std::f64::consts::PI * i as f64 / 3.0).cos()).collect();
        let rows = matousek_extrapolation_profile(&c6, &PointConfig::line(&t).unwrap(), &[2.0, 4.0, 8.0, 16.0]).unwrap();
        assert!(close(rows[0].normalized, SQRT_2 / 2.0, 1e-9));
        assert!(rows.iter().all(|r| r.normalized <= 1.5));
        // regular graphs: both normalizations agree
        assert!(rows.iter().all(|r| close(r.edge_set_ratio, r.ratio, 1e-12)));
    }

    #[test]
    fn named_matches_direct() {
        let inputs: BTreeMap<String, f64> =
            [("n", 6.0), ("lambda2", 0.5), ("ratio", 2.0)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let r = evaluate_named("dim", &inputs, Some(1.5)).unwrap();
        assert_eq!(r.value, dimension_lower_bound(6, 0.5, 2.0, 1.5).unwrap());
        assert_eq!(r.inputs, inputs);
        assert!(evaluate_named("nope", &inputs, None).is_err());
        assert!(evaluate_named("dx", &BTreeMap::new(), None).is_err());
    }
}

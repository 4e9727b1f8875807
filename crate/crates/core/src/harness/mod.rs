//! Experiment runner: expands a config into instances, runs them in
//! parallel, and produces JSON-lines rows, a summary and CSV plot data.
//!
//! Rows are ordered by instance index and contain no timing, so a fixed
//! config and seed reproduce them byte for byte. A failing instance yields a
//! row with `"status": "failed"` instead of aborting the sweep.

mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

pub use config::{BoundSweepSpec, ExperimentConfig, GraphSpec, Pipeline};

use crate::bounds::{
    distortion_lower_vs_dx, dimension_lower_bound, dx_lower_bound, effective_constant, evaluate_named,
    expander_dim_exponent, matousek_extrapolation_profile,
};
use crate::embeddings::{evaluate_embedding, frechet_embedding, optimize_embedding, simplex_embedding, Embedding};
use crate::error::{Error, Result};
use crate::graphs::{normalized_adjacency, random_regular_graph, RegularGraph, StochasticMatrix};
use crate::metrics::shortest_path_metric;
use crate::norms::{hilbert_distance, NormedSpace};
use crate::poincare::{gamma_line_exact, maximize_poincare_ratio, poincare_ratio, PointConfig};
use crate::spectral::{second_eigenpair, second_eigenvalue};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SPOT_CHECK_ROWS: usize = 5;
const SPOT_CHECK_TOL: f64 = 1e-12;

/// SplitMix64 finalizer, used to derive independent seeds.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0x632b_e59b_d9b4_e5b5);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A random `k`-regular graph with `λ₂ < threshold`, resampling with fresh
/// seeds up to `retries` times. Returns the graph, `λ₂`, the seed that
/// produced it and the number of attempts.
pub fn expander_graph(
    n: usize,
    k: usize,
    seed: u64,
    retries: usize,
    threshold: f64,
) -> Result<(RegularGraph, f64, u64, usize)> {
    let mut last = f64::NAN;
    for attempt in 0..=retries {
        let s = if attempt == 0 { seed } else { mix_seed(seed, attempt as u64) };
        let g = random_regular_graph(n, k, s)?;
        last = second_eigenvalue(&normalized_adjacency(&g))?;
        if last < threshold {
            return Ok((g, last, s, attempt + 1));
        }
    }
    Err(Error::WeakExpansion { lambda2: last, threshold, attempts: retries + 1 })
}

#[derive(Debug, Clone)]
struct Instance {
    index: usize,
    graph: usize,
    seed: u64,
    label: String,
    /// Sweep axis value: `k` for the obstruction pipeline, a space index for
    /// the benchmark, an exponent-free grid point index for bound sweeps.
    axis: usize,
}

fn instances(cfg: &ExperimentConfig) -> Vec<Instance> {
    let base = cfg.seed.unwrap_or(0);
    let mut out = Vec::new();
    if cfg.pipeline == Pipeline::BoundSweep {
        let grid = &cfg.bound.as_ref().expect("validated").grid;
        let total: usize = grid.values().map(Vec::len).product();
        for i in 0..total {
            out.push(Instance { index: i, graph: 0, seed: 0, label: format!("grid[{i}]"), axis: i });
        }
        return out;
    }
    for (gi, g) in cfg.graphs.iter().enumerate() {
        for copy in 0..g.count() {
            let seed = mix_seed(base, ((gi as u64) << 32) | copy as u64);
            let label = if g.count() > 1 { format!("{}#{copy}", g.label()) } else { g.label() };
            let axes: Vec<usize> = match cfg.pipeline {
                Pipeline::ExpanderObstruction => cfg.k_sweep.clone(),
                Pipeline::EmbedBenchmark => (0..cfg.spaces.len()).collect(),
                _ => vec![0],
            };
            for axis in axes {
                out.push(Instance { index: out.len(), graph: gi, seed, label: label.clone(), axis });
            }
        }
    }
    out
}

/// Graph (if any), matrix, `λ₂` and the seed actually used for an instance.
fn instance_matrix(cfg: &ExperimentConfig, inst: &Instance) -> Result<(Option<RegularGraph>, StochasticMatrix, f64, u64)> {
    let spec = &cfg.graphs[inst.graph];
    if let GraphSpec::RandomRegular { n, k, .. } = spec {
        let (g, l2, s, _) = expander_graph(*n, *k, inst.seed, cfg.retries, cfg.expansion_threshold)?;
        let a = normalized_adjacency(&g);
        return Ok((Some(g), a, l2, s));
    }
    let g = spec.graph(inst.seed, &cfg.base_dir)?;
    let a = match &g {
        Some(g) => normalized_adjacency(g),
        None => spec.matrix(inst.seed, &cfg.base_dir)?,
    };
    let l2 = second_eigenvalue(&a)?;
    Ok((g, a, l2, inst.seed))
}

fn optimizer(cfg: &ExperimentConfig, seed: u64) -> crate::optim::OptimizerConfig {
    crate::optim::OptimizerConfig { seed, ..cfg.optimizer.clone() }
}

fn obj(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!(),
    }
}

fn verify_line_gamma(cfg: &ExperimentConfig, inst: &Instance) -> Result<Map<String, Value>> {
    let (_, a, lambda2, graph_seed) = instance_matrix(cfg, inst)?;
    let exact = gamma_line_exact(&a)?;
    let (points, report) = maximize_poincare_ratio(&a, &NormedSpace::real_line(), 2.0, &optimizer(cfg, inst.seed), None)?;
    let err = report.ratio * (1.0 - lambda2) - 1.0;
    Ok(obj(json!({
        "graph_seed": graph_seed,
        "n": a.n(),
        "lambda2": lambda2,
        "gamma_exact": exact,
        "ratio": report.ratio,
        "normalized_error": err,
        "within_tolerance": err.abs() <= 0.01,
        "points": points.coords(),
    })))
}

fn expander_obstruction(cfg: &ExperimentConfig, inst: &Instance) -> Result<Map<String, Value>> {
    let (g, a, lambda2, graph_seed) = instance_matrix(cfg, inst)?;
    let g = g.expect("validated: graphs only");
    let n = g.n();
    let k = inst.axis;
    let metric = shortest_path_metric(&g)?;
    let space = NormedSpace::lp(k, f64::INFINITY)?;
    let (_, report) = optimize_embedding(
        &metric,
        &space,
        crate::embeddings::Objective::PairsRmsSubjectToEdgeRms,
        Some(&a),
        &optimizer(cfg, inst.seed),
    )?;
    let edge_rms = report.edge_rms.expect("matrix given");
    let pairs_rms = report.pairs_rms.expect("matrix given");
    let gamma = report.poincare_ratio().ok_or_else(|| Error::NumericalFailure("edge RMS vanished".into()))?;
    let sum_ratio = n as f64 * gamma;
    let c_eff = effective_constant(k, n, lambda2, sum_ratio)?;
    Ok(obj(json!({
        "graph_seed": graph_seed,
        "n": n,
        "degree": g.k(),
        "dim": k,
        "lambda2": lambda2,
        "edge_rms": edge_rms,
        "pairs_rms": pairs_rms,
        "ratio": gamma,
        "sum_ratio": sum_ratio,
        "dim_bound": dimension_lower_bound(n, lambda2, sum_ratio, 1.0)?,
        "dx_bound": dx_lower_bound(n, lambda2, sum_ratio, 1.0)?,
        "d_x": (k as f64).sqrt(),
        "c_eff": c_eff,
        "expander_exponent": expander_dim_exponent(lambda2, g.k().max(2), 1.0)?,
        "eta": pairs_rms / edge_rms * (g.k() as f64).ln() / (n as f64).ln(),
        "distortion": report.distortion,
        "average_distortion": report.average_distortion,
    })))
}

fn matousek_profile(cfg: &ExperimentConfig, inst: &Instance) -> Result<Map<String, Value>> {
    let (_, a, _, graph_seed) = instance_matrix(cfg, inst)?;
    let (lambda2, v) = second_eigenpair(&a)?;
    let rows = matousek_extrapolation_profile(&a, &PointConfig::line(&v)?, &cfg.p_list)?;
    let max = rows.iter().map(|r| r.normalized).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.normalized).fold(f64::INFINITY, f64::min);
    Ok(obj(json!({
        "graph_seed": graph_seed,
        "n": a.n(),
        "lambda2": lambda2,
        "profile": rows,
        "max_normalized": max,
        "min_normalized": min,
        "spread": max / min,
    })))
}

fn grid_point(spec: &BoundSweepSpec, index: usize) -> BTreeMap<String, f64> {
    let mut rest = index;
    let mut point = BTreeMap::new();
    // last key varies fastest
    for (key, values) in spec.grid.iter().rev() {
        point.insert(key.clone(), values[rest % values.len()]);
        rest /= values.len();
    }
    point
}

fn bound_sweep(cfg: &ExperimentConfig, inst: &Instance) -> Result<Map<String, Value>> {
    let spec = cfg.bound.as_ref().expect("validated");
    let report = evaluate_named(&spec.name, &grid_point(spec, inst.axis), spec.constant)?;
    Ok(obj(json!({ "bound": report })))
}

fn embed_benchmark(cfg: &ExperimentConfig, inst: &Instance) -> Result<Map<String, Value>> {
    let (g, a, lambda2, graph_seed) = instance_matrix(cfg, inst)?;
    let g = g.expect("validated: graphs only");
    let metric = shortest_path_metric(&g)?;
    let spec = &cfg.spaces[inst.axis];
    let space = spec.build()?;
    let frechet = evaluate_embedding(&frechet_embedding(&metric)?, None)?;
    let simplex = evaluate_embedding(&simplex_embedding(&metric)?, None)?;
    let (e, report) = optimize_embedding(&metric, &space, cfg.objective, Some(&a), &optimizer(cfg, inst.seed))?;
    let dx = hilbert_distance(&space)?;
    Ok(obj(json!({
        "graph_seed": graph_seed,
        "n": metric.n(),
        "lambda2": lambda2,
        "diameter": metric.diameter(),
        "space": spec,
        "objective": cfg.objective,
        "frechet_distortion": frechet.distortion,
        "simplex_distortion": simplex.distortion,
        "distortion": report.distortion,
        "average_distortion": report.average_distortion,
        "ratio": report.poincare_ratio(),
        "d_x_upper": dx.upper,
        "distortion_vs_dx": distortion_lower_vs_dx(metric.diameter().max(1.0), dx.upper)?,
        "image": e.image.coords(),
    })))
}

fn run_instance(cfg: &ExperimentConfig, inst: &Instance) -> Value {
    let result = match cfg.pipeline {
        Pipeline::VerifyLineGamma => verify_line_gamma(cfg, inst),
        Pipeline::ExpanderObstruction => expander_obstruction(cfg, inst),
        Pipeline::MatousekProfile => matousek_profile(cfg, inst),
        Pipeline::BoundSweep => bound_sweep(cfg, inst),
        Pipeline::EmbedBenchmark => embed_benchmark(cfg, inst),
    };
    let mut row = Map::new();
    row.insert("instance".into(), json!(inst.index));
    row.insert("label".into(), json!(inst.label));
    row.insert("seed".into(), json!(inst.seed));
    match result {
        Ok(fields) => {
            row.insert("status".into(), json!("ok"));
            row.extend(fields);
        }
        Err(e) => {
            row.insert("status".into(), json!("failed"));
            row.insert("error".into(), json!(e.to_string()));
        }
    }
    Value::Object(row)
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= SPOT_CHECK_TOL * a.abs().max(b.abs())
}

fn field(row: &Value, key: &str) -> Result<f64> {
    row.get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::NumericalFailure(format!("row lacks numeric field '{key}'")))
}

fn floats(row: &Value, key: &str) -> Result<Vec<f64>> {
    row.get(key)
        .and_then(Value::as_array)
        .map(|v| v.iter().filter_map(Value::as_f64).collect())
        .ok_or_else(|| Error::NumericalFailure(format!("row lacks array field '{key}'")))
}

/// Recomputes a row's outputs from its stored inputs by calling the
/// underlying modules; returns the names of fields that disagree.
fn recheck(cfg: &ExperimentConfig, inst: &Instance, row: &Value) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    let mut expect = |name: &str, stored: f64, fresh: f64| {
        if !close(stored, fresh) {
            bad.push(format!("{name}: stored {stored}, recomputed {fresh}"));
        }
    };
    match cfg.pipeline {
        Pipeline::VerifyLineGamma => {
            let (_, a, _, _) = instance_matrix(cfg, inst)?;
            expect("gamma_exact", field(row, "gamma_exact")?, gamma_line_exact(&a)?);
            let points = PointConfig::line(&floats(row, "points")?)?;
            expect("ratio", field(row, "ratio")?, poincare_ratio(&a, &NormedSpace::real_line(), &points, 2.0)?.ratio);
        }
        Pipeline::ExpanderObstruction => {
            let (_, a, _, _) = instance_matrix(cfg, inst)?;
            let lambda2 = second_eigenvalue(&a)?;
            expect("lambda2", field(row, "lambda2")?, lambda2);
            let (n, k) = (field(row, "n")? as usize, field(row, "dim")? as usize);
            let sum_ratio = field(row, "sum_ratio")?;
            expect("c_eff", field(row, "c_eff")?, effective_constant(k, n, lambda2, sum_ratio)?);
            expect("dim_bound", field(row, "dim_bound")?, dimension_lower_bound(n, lambda2, sum_ratio, 1.0)?);
            expect("dx_bound", field(row, "dx_bound")?, dx_lower_bound(n, lambda2, sum_ratio, 1.0)?);
        }
        Pipeline::MatousekProfile => {
            let (_, a, _, _) = instance_matrix(cfg, inst)?;
            let (_, v) = second_eigenpair(&a)?;
            let fresh = matousek_extrapolation_profile(&a, &PointConfig::line(&v)?, &cfg.p_list)?;
            let stored = row.get("profile").and_then(Value::as_array).cloned().unwrap_or_default();
            for (s, f) in stored.iter().zip(&fresh) {
                expect("normalized", field(s, "normalized")?, f.normalized);
            }
        }
        Pipeline::BoundSweep => {
            let spec = cfg.bound.as_ref().expect("validated");
            let fresh = evaluate_named(&spec.name, &grid_point(spec, inst.axis), spec.constant)?;
            expect("value", field(&row["bound"], "value")?, fresh.value);
        }
        Pipeline::EmbedBenchmark => {
            let (g, a, _, _) = instance_matrix(cfg, inst)?;
            let metric = shortest_path_metric(&g.expect("validated"))?;
            let space = cfg.spaces[inst.axis].build()?;
            let image = PointConfig::new(space.dim(), floats(row, "image")?)?;
            let r = evaluate_embedding(&Embedding::new(metric.clone(), space, image)?, Some(&a))?;
            expect("distortion", field(row, "distortion")?, r.distortion);
            let s = evaluate_embedding(&simplex_embedding(&metric)?, None)?;
            expect("simplex_distortion", field(row, "simplex_distortion")?, s.distortion);
        }
    }
    Ok(bad)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpotCheck {
    pub rows: Vec<usize>,
    pub passed: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Stats {
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub count: usize,
}

fn stats(values: &mut [f64]) -> Option<Stats> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len();
    let median = if m % 2 == 1 { values[m / 2] } else { 0.5 * (values[m / 2 - 1] + values[m / 2]) };
    Some(Stats { min: values[0], median, max: values[m - 1], count: m })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub pipeline: Pipeline,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub config: ExperimentConfig,
    #[serde(skip)]
    pub rows: Vec<Value>,
    pub instances: usize,
    pub failures: usize,
    pub summary: BTreeMap<String, Stats>,
    /// Extra pipeline-level facts, e.g. the C_eff floor check.
    pub checks: BTreeMap<String, Value>,
    pub spot_check: SpotCheck,
    pub wall_time_s: f64,
}

impl ExperimentReport {
    pub fn all_succeeded(&self) -> bool {
        self.failures == 0 && self.spot_check.passed
    }

    /// `rows.jsonl` content: one JSON object per line, in instance order.
    pub fn rows_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&serde_json::to_string(r).expect("rows serialize"));
            out.push('\n');
        }
        out
    }

    pub fn plot_csv(&self) -> String {
        let columns: &[&str] = match self.pipeline {
            Pipeline::VerifyLineGamma => &["instance", "label", "n", "lambda2", "gamma_exact", "ratio", "normalized_error"],
            Pipeline::ExpanderObstruction => &[
                "instance", "label", "n", "dim", "lambda2", "ratio", "sum_ratio", "dim_bound", "dx_bound", "c_eff", "eta",
            ],
            Pipeline::MatousekProfile => &["instance", "label", "lambda2", "p", "ratio", "root", "normalized"],
            Pipeline::BoundSweep => &["instance", "name", "value", "case_taken"],
            Pipeline::EmbedBenchmark => &[
                "instance", "label", "n", "diameter", "frechet_distortion", "simplex_distortion", "distortion",
                "average_distortion", "d_x_upper", "distortion_vs_dx",
            ],
        };
        let cell = |v: Option<&Value>| match v {
            Some(Value::String(s)) => format!("\"{}\"", s.replace('"', "\"\"")),
            Some(Value::Null) | None => String::new(),
            Some(v) => v.to_string(),
        };
        let mut out = columns.join(",");
        out.push('\n');
        for r in self.rows.iter().filter(|r| r["status"] == "ok") {
            let lines: Vec<Map<String, Value>> = match self.pipeline {
                Pipeline::MatousekProfile => r["profile"]
                    .as_array()
                    .map(|a| {
                        a.iter()
                            .map(|p| {
                                let mut m = r.as_object().cloned().unwrap_or_default();
                                m.extend(p.as_object().cloned().unwrap_or_default());
                                m
                            })
                            .collect()
                    })
                    .unwrap_or_default(),
                Pipeline::BoundSweep => {
                    let mut m = r.as_object().cloned().unwrap_or_default();
                    m.extend(r["bound"].as_object().cloned().unwrap_or_default());
                    vec![m]
                }
                _ => vec![r.as_object().cloned().unwrap_or_default()],
            };
            for m in lines {
                let cells: Vec<String> = columns.iter().map(|c| cell(m.get(*c))).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        out
    }

    /// Writes `rows.jsonl`, `summary.json` and `plot.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("rows.jsonl"), self.rows_jsonl())?;
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(self)? + "\n")?;
        fs::write(dir.join("plot.csv"), self.plot_csv())?;
        Ok(())
    }
}

fn summary_fields(p: Pipeline) -> &'static [&'static str] {
    match p {
        Pipeline::VerifyLineGamma => &["ratio", "normalized_error", "lambda2"],
        Pipeline::ExpanderObstruction => &["c_eff", "ratio", "dim_bound", "dx_bound", "eta", "lambda2"],
        Pipeline::MatousekProfile => &["max_normalized", "min_normalized", "spread", "lambda2"],
        Pipeline::BoundSweep => &[],
        Pipeline::EmbedBenchmark => &["distortion", "average_distortion", "simplex_distortion"],
    }
}

/// Runs a validated config. `jobs` caps the worker threads (default: all
/// cores); results do not depend on it.
pub fn run_pipeline(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let list = instances(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let rows: Vec<Value> = pool.install(|| list.par_iter().map(|inst| run_instance(cfg, inst)).collect());
    let failures = rows.iter().filter(|r| r["status"] != "ok").count();

    let mut summary = BTreeMap::new();
    for key in summary_fields(cfg.pipeline) {
        let mut values: Vec<f64> = rows.iter().filter_map(|r| r.get(*key).and_then(Value::as_f64)).collect();
        if let Some(s) = stats(&mut values) {
            summary.insert(key.to_string(), s);
        }
    }
    if cfg.pipeline == Pipeline::BoundSweep {
        let mut values: Vec<f64> = rows.iter().filter_map(|r| r["bound"]["value"].as_f64()).collect();
        if let Some(s) = stats(&mut values) {
            summary.insert("value".into(), s);
        }
    }

    let mut checks = BTreeMap::new();
    match cfg.pipeline {
        Pipeline::ExpanderObstruction => {
            let min = summary.get("c_eff").map(|s| s.min);
            let ok = failures == 0 && min.is_some_and(|m| m.is_finite() && m >= cfg.c_eff_floor);
            checks.insert("c_eff_floor".into(), json!(cfg.c_eff_floor));
            checks.insert("c_eff_min".into(), json!(min));
            checks.insert("c_eff_floor_met".into(), json!(ok));
        }
        Pipeline::VerifyLineGamma => {
            let ok = rows.iter().all(|r| r["within_tolerance"] == true);
            checks.insert("all_within_tolerance".into(), json!(ok));
        }
        _ => {}
    }

    let ok_rows: Vec<usize> = (0..rows.len()).filter(|&i| rows[i]["status"] == "ok").collect();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed.unwrap_or(0), 0x5907));
    let mut picked: Vec<usize> = sample(&mut rng, ok_rows.len(), SPOT_CHECK_ROWS.min(ok_rows.len()))
        .into_iter()
        .map(|i| ok_rows[i])
        .collect();
    picked.sort_unstable();
    let mut spot_failures = Vec::new();
    for &i in &picked {
        match recheck(cfg, &list[i], &rows[i]) {
            Ok(bad) => spot_failures.extend(bad.into_iter().map(|b| format!("row {i}: {b}"))),
            Err(e) => spot_failures.push(format!("row {i}: {e}")),
        }
    }

    Ok(ExperimentReport {
        pipeline: cfg.pipeline,
        seed: cfg.seed,
        version: VERSION,
        config: cfg.clone(),
        rows,
        instances: list.len(),
        failures,
        summary,
        checks,
        spot_check: SpotCheck { rows: picked, passed: spot_failures.is_empty(), failures: spot_failures },
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text).unwrap()
    }

    #[test]
    fn bound_sweep_rows_match_direct_calls() {
        let c = cfg(r#"
            pipeline = "bound-sweep"
            [bound]
            name = "dim"
            grid = { n = [4, 6], lambda2 = [0.0], ratio = [1.0] }
        "#);
        let r = run_pipeline(&c, Some(1)).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!(r.spot_check.passed);
        let values: Vec<f64> = r.rows.iter().map(|row| row["bound"]["value"].as_f64().unwrap()).collect();
        assert_eq!(values[0], dimension_lower_bound(4, 0.0, 1.0, 1.0).unwrap());
        assert_eq!(values[1], dimension_lower_bound(6, 0.0, 1.0, 1.0).unwrap());
    }

    #[test]
    fn failures_are_rows_not_aborts() {
        let c = cfg(r#"
            pipeline = "bound-sweep"
            [bound]
            name = "dim"
            grid = { n = [4], lambda2 = [0.0, 1.0], ratio = [1.0] }
        "#);
        let r = run_pipeline(&c, None).unwrap();
        assert_eq!(r.failures, 1);
        assert_eq!(r.rows[1]["status"], "failed");
        assert!(!r.all_succeeded());
    }

    #[test]
    fn grid_enumeration_covers_product() {
        let spec = BoundSweepSpec {
            name: "dim".into(),
            constant: None,
            grid: [("a".to_string(), vec![1.0, 2.0]), ("b".to_string(), vec![3.0, 4.0, 5.0])].into_iter().collect(),
        };
        let points: Vec<_> = (0..6).map(|i| grid_point(&spec, i)).collect();
        assert_eq!(points[0]["a"], 1.0);
        assert_eq!(points[1]["b"], 4.0);
        assert_eq!(points[5]["a"], 2.0);
        assert_eq!(points[5]["b"], 5.0);
    }
}

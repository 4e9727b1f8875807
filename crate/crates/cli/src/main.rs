use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use gapscope::embeddings::{optimize_embedding, Objective};
use gapscope::graphs::{
    complete_graph, cycle_graph, hypercube_graph, margulis_graph, normalized_adjacency, random_regular_graph,
    StochasticMatrix,
};
use gapscope::harness::{run_pipeline, ExperimentConfig};
use gapscope::io::{
    parse_bound_inputs, parse_edge_list, parse_matrix_csv, parse_metric_csv, parse_points_csv, parse_space_json,
    write_edge_list, write_matrix_csv, write_points_csv,
};
use gapscope::limits::Limits;
use gapscope::metrics::{counting_lower_bound, shortest_path_metric};
use gapscope::norms::{convexity_estimate, hilbert_distance, smoothness_estimate, NormedSpace};
use gapscope::optim::OptimizerConfig;
use gapscope::poincare::{maximize_poincare_ratio, poincare_ratio};
use gapscope::spectral::{full_spectrum, power_iteration, second_eigenvalue, POWER_MAX_ITERS, POWER_TOL};
use gapscope::bounds::evaluate_named;

#[derive(Parser)]
#[command(name = "gapscope", version, about = "Nonlinear spectral gaps and embedding obstructions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Cycle,
    Complete,
    Hypercube,
    RandomRegular,
    Margulis,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormOp {
    HilbertDistance,
    Smoothness,
    Convexity,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Distortion,
    Avg,
    Ratio,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Distortion => Objective::Distortion,
            ObjectiveArg::Avg => Objective::AverageDistortion,
            ObjectiveArg::Ratio => Objective::PairsRmsSubjectToEdgeRms,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph and write it as an edge list.
    Gen {
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// Vertex count; the cube dimension for `hypercube`.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the normalized adjacency matrix as CSV.
        #[arg(long)]
        matrix_out: Option<PathBuf>,
    },
    /// Second eigenvalue and spectral gap of a stochastic matrix.
    Spectrum {
        #[arg(long)]
        matrix: PathBuf,
        /// Compute every eigenvalue with the dense solver.
        #[arg(long)]
        full: bool,
    },
    /// Shortest-path metric of an edge-list graph.
    Metric {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Euclidean distance and smoothness/convexity estimates of a space.
    Norms {
        #[arg(long)]
        space: PathBuf,
        #[arg(long, value_enum)]
        op: NormOp,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long, default_value_t = 64)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Poincaré ratio of a configuration, or its adversarial maximum.
    Poincare {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, conflicts_with = "maximize")]
        points: Option<PathBuf>,
        #[arg(long)]
        maximize: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        /// Where to write the maximizing configuration.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a closed-form bound.
    Bound {
        #[arg(long)]
        name: String,
        #[arg(long)]
        inputs: PathBuf,
        #[arg(long)]
        constant: Option<f64>,
    },
    /// Optimize an embedding of a finite metric into a normed space.
    Embed {
        #[arg(long)]
        metric: PathBuf,
        #[arg(long)]
        space: PathBuf,
        #[arg(long, value_enum)]
        objective: ObjectiveArg,
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment pipeline from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_matrix(path: &Path) -> Result<StochasticMatrix> {
    let a = parse_matrix_csv(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    Limits::from_env().check(a.n())?;
    Ok(a)
}

fn load_space(path: &Path) -> Result<NormedSpace> {
    parse_space_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn print(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON values serialize"));
}

fn optimizer(seed: u64, restarts: Option<usize>, steps: Option<usize>) -> Result<OptimizerConfig> {
    let mut opt = OptimizerConfig { seed, ..OptimizerConfig::default() };
    if let Some(r) = restarts {
        opt.restarts = r;
    }
    if let Some(s) = steps {
        opt.steps = s;
    }
    opt.validate()?;
    Ok(opt)
}

fn need(v: Option<usize>, flag: &str, family: &str) -> Result<usize> {
    v.with_context(|| format!("--{flag} is required for family {family}"))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen { family, n, k, m, seed, out, matrix_out } => {
            let limits = Limits::from_env();
            let g = match family {
                FamilyArg::Cycle => cycle_graph(need(n, "n", "cycle")?)?,
                FamilyArg::Complete => complete_graph(need(n, "n", "complete")?)?,
                FamilyArg::Hypercube => {
                    let d = need(n, "n", "hypercube")?;
                    hypercube_graph(u32::try_from(d).context("hypercube dimension too large")?)?
                }
                FamilyArg::RandomRegular => {
                    let n = need(n, "n", "random-regular")?;
                    limits.check(n)?;
                    random_regular_graph(n, need(k, "k", "random-regular")?, seed)?
                }
                FamilyArg::Margulis => margulis_graph(need(m, "m", "margulis")?)?,
            };
            limits.check(g.n())?;
            write(&out, &write_edge_list(&g))?;
            let a = normalized_adjacency(&g);
            if let Some(path) = matrix_out {
                write(&path, &write_matrix_csv(a.entries()))?;
            }
            print(&json!({
                "family": g.family(),
                "n": g.n(),
                "k": g.k(),
                "edges": g.edges().len(),
                "lambda2": second_eigenvalue(&a)?,
            }));
        }
        Command::Spectrum { matrix, full } => {
            let a = load_matrix(&matrix)?;
            if full {
                let s = full_spectrum(&a)?;
                print(&json!({
                    "n": a.n(),
                    "lambda2": s.lambda2(),
                    "gap": s.gap,
                    "eigenvalues": s.eigenvalues,
                    "residual": s.residual,
                }));
            } else {
                let lambda2 = second_eigenvalue(&a)?;
                let run = power_iteration(&a, POWER_TOL, POWER_MAX_ITERS);
                let residual = if run.converged { run.residual } else { full_spectrum(&a)?.residual };
                print(&json!({ "n": a.n(), "lambda2": lambda2, "gap": 1.0 - lambda2, "residual": residual }));
            }
        }
        Command::Metric { graph, out } => {
            let g = parse_edge_list(&read(&graph)?).with_context(|| format!("parsing {}", graph.display()))?;
            let d = shortest_path_metric(&g)?;
            write(&out, &write_matrix_csv(d.matrix()))?;
            print(&json!({
                "n": d.n(),
                "diameter": d.diameter(),
                "avg_distance": d.avg_distance(),
                "counting_bound": counting_lower_bound(g.n(), g.k()).ok(),
            }));
        }
        Command::Norms { space, op, p, q, trials, seed } => {
            let x = load_space(&space)?;
            let v = match op {
                NormOp::HilbertDistance => serde_json::to_value(hilbert_distance(&x)?)?,
                NormOp::Smoothness => serde_json::to_value(smoothness_estimate(&x, p, trials, seed)?)?,
                NormOp::Convexity => serde_json::to_value(convexity_estimate(&x, q, trials, seed)?)?,
            };
            print(&v);
        }
        Command::Poincare { matrix, space, p, points, maximize, seed, restarts, steps, out } => {
            let a = load_matrix(&matrix)?;
            let x = load_space(&space)?;
            if maximize {
                let seed = seed.context("--maximize needs --seed")?;
                let opt = optimizer(seed, restarts, steps)?;
                let (cfg, report) = maximize_poincare_ratio(&a, &x, p, &opt, None)?;
                if let Some(path) = out {
                    write(&path, &write_points_csv(&cfg))?;
                }
                print(&json!({ "report": report, "points": cfg.rows() }));
            } else {
                let path = points.context("pass --points <csv> or --maximize")?;
                let cfg = parse_points_csv(&read(&path)?).with_context(|| format!("parsing {}", path.display()))?;
                print(&serde_json::to_value(poincare_ratio(&a, &x, &cfg, p)?)?);
            }
        }
        Command::Bound { name, inputs, constant } => {
            let inputs = parse_bound_inputs(&read(&inputs)?)?;
            print(&serde_json::to_value(evaluate_named(&name, &inputs, constant)?)?);
        }
        Command::Embed { metric, space, objective, matrix, seed, restarts, steps, out } => {
            let m = parse_metric_csv(&read(&metric)?).with_context(|| format!("parsing {}", metric.display()))?;
            Limits::from_env().check(m.n())?;
            let x = load_space(&space)?;
            let a = matrix.as_deref().map(load_matrix).transpose()?;
            let opt = optimizer(seed, restarts, steps)?;
            let (e, report) = optimize_embedding(&m, &x, objective.into(), a.as_ref(), &opt)?;
            write(&out, &write_points_csv(&e.image))?;
            print(&serde_json::to_value(report)?);
        }
        Command::Run { config, seed, jobs } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if seed.is_some() {
                cfg.seed = seed;
            }
            if jobs == Some(0) {
                bail!("--jobs must be at least 1");
            }
            let report = run_pipeline(&cfg, jobs)?;
            let dir = cfg.output_path();
            report.write(&dir)?;
            for row in report.rows.iter().filter(|r| r["status"] != "ok") {
                eprintln!("instance {} ({}) failed: {}", row["instance"], row["label"], row["error"]);
            }
            for f in &report.spot_check.failures {
                eprintln!("spot check: {f}");
            }
            print(&json!({
                "pipeline": report.pipeline,
                "instances": report.instances,
                "failures": report.failures,
                "spot_check_passed": report.spot_check.passed,
                "checks": report.checks,
                "output_dir": dir,
                "wall_time_s": report.wall_time_s,
            }));
            return Ok(report.all_succeeded());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

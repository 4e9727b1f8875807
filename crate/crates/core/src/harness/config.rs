//! TOML experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embeddings::Objective;
use crate::error::{Error, Result};
use crate::graphs::{
    complete_graph, cycle_graph, hypercube_graph, margulis_graph, normalized_adjacency, random_stochastic_matrix,
    RegularGraph, StochasticMatrix,
};
use crate::io::{parse_edge_list, parse_matrix_csv, SpaceSpec};
use crate::optim::OptimizerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    VerifyLineGamma,
    ExpanderObstruction,
    MatousekProfile,
    BoundSweep,
    EmbedBenchmark,
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pipeline::VerifyLineGamma => "verify-line-gamma",
            Pipeline::ExpanderObstruction => "expander-obstruction",
            Pipeline::MatousekProfile => "matousek-profile",
            Pipeline::BoundSweep => "bound-sweep",
            Pipeline::EmbedBenchmark => "embed-benchmark",
        };
        f.write_str(s)
    }
}

/// One entry of `[[graphs]]`. `count` repeats randomized families with
/// independent seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Cycle { n: usize },
    Complete { n: usize },
    Hypercube { d: u32 },
    RandomRegular {
        n: usize,
        k: usize,
        #[serde(default = "one")]
        count: usize,
    },
    Margulis { m: usize },
    /// Edge-list file.
    File { path: PathBuf },
    /// Symmetric stochastic matrix CSV (no graph metric available).
    Matrix { path: PathBuf },
    RandomStochastic {
        n: usize,
        #[serde(default = "one")]
        count: usize,
    },
}

fn one() -> usize {
    1
}

impl GraphSpec {
    pub fn count(&self) -> usize {
        match self {
            GraphSpec::RandomRegular { count, .. } | GraphSpec::RandomStochastic { count, .. } => *count,
            _ => 1,
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, GraphSpec::RandomRegular { .. } | GraphSpec::RandomStochastic { .. })
    }

    pub fn label(&self) -> String {
        match self {
            GraphSpec::Cycle { n } => format!("cycle(n={n})"),
            GraphSpec::Complete { n } => format!("complete(n={n})"),
            GraphSpec::Hypercube { d } => format!("hypercube(d={d})"),
            GraphSpec::RandomRegular { n, k, .. } => format!("random_regular(n={n},k={k})"),
            GraphSpec::Margulis { m } => format!("margulis(m={m})"),
            GraphSpec::File { path } | GraphSpec::Matrix { path } => path.display().to_string(),
            GraphSpec::RandomStochastic { n, .. } => format!("random_stochastic(n={n})"),
        }
    }

    /// The graph, when the entry describes one.
    pub fn graph(&self, seed: u64, base: &Path) -> Result<Option<RegularGraph>> {
        Ok(Some(match self {
            GraphSpec::Cycle { n } => cycle_graph(*n)?,
            GraphSpec::Complete { n } => complete_graph(*n)?,
            GraphSpec::Hypercube { d } => hypercube_graph(*d)?,
            GraphSpec::RandomRegular { n, k, .. } => crate::graphs::random_regular_graph(*n, *k, seed)?,
            GraphSpec::Margulis { m } => margulis_graph(*m)?,
            GraphSpec::File { path } => parse_edge_list(&std::fs::read_to_string(base.join(path))?)?,
            GraphSpec::Matrix { .. } | GraphSpec::RandomStochastic { .. } => return Ok(None),
        }))
    }

    pub fn matrix(&self, seed: u64, base: &Path) -> Result<StochasticMatrix> {
        match self {
            GraphSpec::Matrix { path } => parse_matrix_csv(&std::fs::read_to_string(base.join(path))?),
            GraphSpec::RandomStochastic { n, .. } => random_stochastic_matrix(*n, seed),
            _ => Ok(normalized_adjacency(&self.graph(seed, base)?.expect("graph families build graphs"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSweepSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    /// Each input takes every listed value; rows cover the product.
    pub grid: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pipeline: Pipeline,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Relative paths resolve against the config file's directory.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub graphs: Vec<GraphSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spaces: Vec<SpaceSpec>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    /// Exponents for the extrapolation profile.
    #[serde(default = "default_p_list")]
    pub p_list: Vec<f64>,
    /// Target dimensions `k` of `ℓ_∞^k` for the obstruction pipeline.
    #[serde(default = "default_k_sweep")]
    pub k_sweep: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundSweepSpec>,
    #[serde(default = "default_objective")]
    pub objective: Objective,
    #[serde(default = "default_floor")]
    pub c_eff_floor: f64,
    /// Resampling budget for random regular graphs whose `λ₂` exceeds
    /// `expansion_threshold`.
    #[serde(default = "default_retries")]
    pub retries: usize,
    #[serde(default = "default_threshold")]
    pub expansion_threshold: f64,
    /// Directory that relative paths resolve against; set by [`ExperimentConfig::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("gapscope-out")
}

fn default_p_list() -> Vec<f64> {
    vec![2.0, 4.0, 8.0, 16.0]
}

fn default_k_sweep() -> Vec<usize> {
    vec![4, 16, 64]
}

fn default_objective() -> Objective {
    Objective::Distortion
}

fn default_floor() -> f64 {
    0.05
}

fn default_retries() -> usize {
    3
}

fn default_threshold() -> f64 {
    0.95
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads, parses and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn output_path(&self) -> PathBuf {
        self.base_dir.join(&self.output_dir)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.pipeline != Pipeline::BoundSweep && self.seed.is_none() {
            return err(format!("pipeline {} is randomized and needs a seed", self.pipeline));
        }
        self.optimizer.validate().map_err(|e| Error::Config(e.to_string()))?;
        for g in &self.graphs {
            if let GraphSpec::File { path } | GraphSpec::Matrix { path } = g {
                let full = self.base_dir.join(path);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", full.display())))?;
                let parsed = match g {
                    GraphSpec::File { .. } => parse_edge_list(&text).map(|_| ()),
                    _ => parse_matrix_csv(&text).map(|_| ()),
                };
                parsed.map_err(|e| Error::Config(format!("{}: {e}", full.display())))?;
            }
            if g.count() == 0 {
                return err(format!("{}: count must be at least 1", g.label()));
            }
        }
        for s in &self.spaces {
            s.build().map_err(|e| Error::Config(format!("space: {e}")))?;
        }
        match self.pipeline {
            Pipeline::BoundSweep => {
                let b = self.bound.as_ref().ok_or_else(|| Error::Config("bound-sweep needs a [bound] table".into()))?;
                if b.grid.values().any(Vec::is_empty) {
                    return err("bound grid axes must be nonempty".into());
                }
            }
            Pipeline::EmbedBenchmark => {
                if self.spaces.is_empty() {
                    return err("embed-benchmark needs at least one [[spaces]] entry".into());
                }
                if self.graphs.iter().any(|g| matches!(g, GraphSpec::Matrix { .. } | GraphSpec::RandomStochastic { .. })) {
                    return err("embed-benchmark needs graphs, not bare matrices".into());
                }
            }
            Pipeline::ExpanderObstruction => {
                if self.k_sweep.is_empty() || self.k_sweep.contains(&0) {
                    return err("k_sweep must list positive dimensions".into());
                }
                if self.graphs.iter().any(|g| matches!(g, GraphSpec::Matrix { .. } | GraphSpec::RandomStochastic { .. })) {
                    return err("expander-obstruction needs graphs, not bare matrices".into());
                }
            }
            Pipeline::MatousekProfile => {
                if self.p_list.is_empty() || self.p_list.iter().any(|p| !(*p >= 1.0 && p.is_finite())) {
                    return err("p_list must list finite exponents >= 1".into());
                }
            }
            Pipeline::VerifyLineGamma => {}
        }
        if self.pipeline != Pipeline::BoundSweep && self.graphs.is_empty() {
            return err(format!("pipeline {} needs at least one [[graphs]] entry", self.pipeline));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::parse(
            r#"
            pipeline = "verify-line-gamma"
            seed = 3
            [[graphs]]
            family = "cycle"
            n = 4
            [[graphs]]
            family = "random_regular"
            n = 20
            k = 3
            count = 2
            [optimizer]
            restarts = 2
            "#,
        )
        .unwrap();
        assert_eq!(cfg.graphs.len(), 2);
        assert_eq!(cfg.optimizer.restarts, 2);
        assert_eq!(cfg.optimizer.steps, 2000);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_missing_seed_and_unknown_keys() {
        let cfg = ExperimentConfig::parse("pipeline = \"verify-line-gamma\"\n[[graphs]]\nfamily = \"cycle\"\nn = 4\n").unwrap();
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::parse("pipeline = \"verify-line-gamma\"\nbogus = 1\n").is_err());
        assert!(ExperimentConfig::parse("pipeline = \"teleport\"\n").is_err());
    }
}

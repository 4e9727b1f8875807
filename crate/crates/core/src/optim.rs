//! Settings shared by the multi-restart optimizers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub steps: usize,
    pub step_size: f64,
    /// Factor applied to the step after a rejected or stalled step.
    pub shrink: f64,
    /// Factor applied to the step after an accepted improving step.
    pub growth: f64,
    /// Relative objective change below which a step counts as stalled.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { restarts: 20, steps: 2000, step_size: 0.1, shrink: 0.5, growth: 1.1, tolerance: 1e-10, seed: 0 }
    }
}

/// Steps smaller than this end a restart.
pub const MIN_STEP: f64 = 1e-12;

impl OptimizerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(invalid("optimizer needs at least one restart"));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(invalid("optimizer step size must be positive"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(invalid("optimizer shrink factor must lie in (0, 1)"));
        }
        if !(self.growth >= 1.0 && self.growth.is_finite()) {
            return Err(invalid("optimizer growth factor must be at least 1"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(invalid("optimizer tolerance must be nonnegative"));
        }
        Ok(())
    }

    /// Independent generator for one restart.
    pub fn restart_rng(&self, restart: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(restart as u64);
        rng
    }
}

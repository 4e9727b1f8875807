use crate::error::{Error, Result};

/// Environment variable that overrides [`Limits::max_n`].
pub const MAX_N_ENV: &str = "GAPSCOPE_MAX_N";

/// Default dense-matrix size guard.
pub const DEFAULT_MAX_N: usize = 20_000;

/// Size guard for dense n×n objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_n: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self { max_n: DEFAULT_MAX_N }
    }
}

impl Limits {
    /// Reads `GAPSCOPE_MAX_N`, falling back to the default when unset or unparsable.
    pub fn from_env() -> Self {
        let max_n = std::env::var(MAX_N_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&v| v > 0)
            .unwrap_or(DEFAULT_MAX_N);
        Self { max_n }
    }

    pub fn check(&self, n: usize) -> Result<()> {
        if n > self.max_n {
            Err(Error::SizeLimit { n, max: self.max_n })
        } else {
            Ok(())
        }
    }
}

//! Run configuration read from TOML files.

use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::DEFAULT_LAMBDA;
use crate::optimizer::Budget;
use crate::plan::{Params, RuleSet};
use crate::scenario::GridConfig;

/// Every tunable of a run. Missing keys take the built-in defaults.
///
/// ```toml
/// seed = 7
/// rules = "ndmgf"
/// max_nodes = 5000
///
/// [params]
/// alpha_nl = 2.0
///
/// [grid]
/// outage_minutes = [60]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub rules: RuleSet,
    pub max_nodes: usize,
    pub max_time_s: f64,
    pub max_open: usize,
    pub lambda: f64,
    /// Worker cap for batches; unset uses every core.
    pub threads: Option<usize>,
    pub params: Params,
    pub grid: GridConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let b = Budget::default();
        RunConfig {
            seed: 42,
            rules: RuleSet::Ssdmgf,
            max_nodes: b.max_nodes,
            max_time_s: b.max_time.as_secs_f64(),
            max_open: b.max_open,
            lambda: DEFAULT_LAMBDA,
            threads: None,
            params: Params::default(),
            grid: GridConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::File { path: path.display().to_string(), source: e })?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn check(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.max_time_s > 0.0) || self.max_nodes == 0 || self.max_open == 0 {
            return Err(Error::Config("budget limits must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        Ok(())
    }

    pub fn budget(&self) -> Budget {
        Budget { max_nodes: self.max_nodes, max_time: Duration::from_secs_f64(self.max_time_s), max_open: self.max_open }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_tables_keep_other_defaults() {
        let c = RunConfig::from_toml_str("seed = 7\nrules = \"rr\"\n[params]\nalpha_nl = 2.0\n[grid]\noutage_minutes = [60]\n")
            .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.rules, RuleSet::Rr);
        assert_eq!(c.params.alpha_nl, 2.0);
        assert_eq!(c.params.alpha_cl, Params::default().alpha_cl);
        assert_eq!(c.grid.outage_minutes, vec![60]);
        assert_eq!(c.grid.t0_hours, GridConfig::default().t0_hours);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(matches!(RunConfig::from_toml_str("sede = 1"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml_str("lambda = 2.0"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml_str("max_nodes = 0"), Err(Error::Config(_))));
    }
}

use serde::{Deserialize, Serialize};

use crate::cutpool::CutStrategy;
use crate::error::{Error, Result};

/// Which solution path a run takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Cga,
    Monolithic,
    Both,
}

/// Tolerances, iteration caps and orchestration settings for a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlgoConfig {
    /// Relative budget slack: `ε = (1 + beta)·least_cost`.
    pub beta: f64,
    /// Least-cost relative optimality gap.
    pub delta_ls: f64,
    /// Relative budget tolerance of the MGA termination test.
    pub delta_mga: f64,
    pub k_ls: usize,
    pub k_mga: usize,
    pub cut_strategy: CutStrategy,
    /// Number of weight clusters; 0 disables partitioning.
    pub partition_k: usize,
    /// Vectors taken from each cluster; `None` takes all of them.
    pub per_partition: Option<usize>,
    pub kmeans_max_iters: usize,
    pub vectors_total: usize,
    pub minmax_fraction: f64,
    pub seed: u64,
    pub mode: RunMode,
    pub worker_count: usize,
    /// Run the CGA instances of different partitions concurrently.
    pub concurrent_partitions: bool,
}

impl Default for AlgoConfig {
    fn default() -> Self {
        Self {
            beta: 0.1,
            delta_ls: 1e-3,
            delta_mga: 0.005,
            k_ls: 500,
            k_mga: 500,
            cut_strategy: CutStrategy::LeastCostOnly,
            partition_k: 0,
            per_partition: None,
            kmeans_max_iters: 100,
            vectors_total: 16,
            minmax_fraction: 0.75,
            seed: 0,
            mode: RunMode::Cga,
            worker_count: 1,
            concurrent_partitions: false,
        }
    }
}

impl AlgoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.beta >= 0.0) {
            return bad(format!("beta must be >= 0, got {}", self.beta));
        }
        if !(self.delta_ls >= 0.0) || !(self.delta_mga >= 0.0) {
            return bad("tolerances must be >= 0".into());
        }
        if self.k_ls < 1 || self.k_mga < 1 {
            return bad("iteration caps must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.minmax_fraction) {
            return bad(format!("minmax_fraction {} outside [0, 1]", self.minmax_fraction));
        }
        if self.worker_count < 1 {
            return bad("worker_count must be >= 1".into());
        }
        if self.per_partition == Some(0) {
            return bad("per_partition must be >= 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        AlgoConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range() {
        let mut c = AlgoConfig::default();
        c.k_mga = 0;
        assert!(c.validate().is_err());
        let mut c = AlgoConfig::default();
        c.minmax_fraction = 1.5;
        assert!(c.validate().is_err());
        let mut c = AlgoConfig::default();
        c.delta_ls = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn partial_json_uses_defaults() {
        let c: AlgoConfig = serde_json::from_str(r#"{"beta": 0.2, "cut_strategy": "all"}"#).unwrap();
        assert_eq!(c.beta, 0.2);
        assert_eq!(c.cut_strategy, CutStrategy::All);
        assert_eq!(c.delta_mga, 0.005);
        assert!(serde_json::from_str::<AlgoConfig>(r#"{"bogus": 1}"#).is_err());
    }
}

//! Cut storage and the cut-sharing strategies used between MGA iterates.
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::dot;

pub const POOL_SCHEMA_VERSION: u64 = 1;

/// Which solve produced a cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    LeastCost,
    /// Index of the MGA iterate (weight vector) whose solve produced the cut.
    Mga(usize),
}

/// Affine under-estimator `value + (x - point)·subgradient` of one period cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cut {
    /// Position of the period in `Instance::periods` (0-based).
    pub period: usize,
    pub point: Vec<f64>,
    pub value: f64,
    pub subgradient: Vec<f64>,
    pub provenance: Provenance,
    pub birth_iteration: usize,
}

impl Cut {
    /// Constant term of the cut written as `θ >= constant + subgradient·x`.
    pub fn intercept(&self) -> f64 {
        self.value - dot(&self.subgradient, &self.point)
    }
}

/// `value + (x - point)·subgradient`
pub fn evaluate_cut(cut: &Cut, x: &[f64]) -> Result<f64> {
    if x.len() != cut.point.len() || cut.subgradient.len() != cut.point.len() {
        return Err(Error::Dimension(format!(
            "cut has dimension {}, point has {}",
            cut.point.len(),
            x.len()
        )));
    }
    Ok(cut.value
        + x.iter()
            .zip(&cut.point)
            .zip(&cut.subgradient)
            .map(|((xi, pi), gi)| (xi - pi) * gi)
            .sum::<f64>())
}

/// Cut-sharing strategy between MGA iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutStrategy {
    /// Every MGA iterate starts from an empty master.
    None,
    /// Only the least-cost cuts are shared.
    LeastCostOnly,
    /// Least-cost cuts plus every cut of every earlier MGA iterate.
    All,
    /// The first `n` cuts by global insertion order, least-cost cuts included.
    /// `None` sizes the window adaptively; see [`CutPool::absorb`].
    FirstN(Option<usize>),
}

impl std::str::FromStr for CutStrategy {
    type Err = Error;

    /// `none`, `least-cost-only`, `all`, `first-n` (adaptive) or `first-n:<count>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "least-cost-only" => Ok(Self::LeastCostOnly),
            "all" => Ok(Self::All),
            "first-n" => Ok(Self::FirstN(None)),
            _ => s
                .strip_prefix("first-n:")
                .and_then(|n| n.parse().ok())
                .map(|n| Self::FirstN(Some(n)))
                .ok_or_else(|| Error::InvalidArgument(format!("unknown cut strategy `{s}`"))),
        }
    }
}

/// Which solve is asking for a view of the pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolPhase {
    LeastCost,
    Mga(usize),
}

/// Number of MGA iterates whose cuts fill an adaptive first-n window.
pub const ADAPTIVE_FIRST_N_ITERATES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutPool {
    dim: usize,
    strategy: CutStrategy,
    cuts: Vec<Cut>,
    /// Adaptive first-n: number of MGA iterates absorbed so far.
    absorbed_iterates: usize,
    /// Adaptive first-n: window size, fixed once enough iterates were absorbed.
    frozen_limit: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoolDocument {
    schema_version: u64,
    pool: CutPool,
}

impl CutPool {
    pub fn new(dim: usize, strategy: CutStrategy) -> Self {
        Self {
            dim,
            strategy,
            cuts: Vec::new(),
            absorbed_iterates: 0,
            frozen_limit: match strategy {
                CutStrategy::FirstN(Some(n)) => Some(n),
                _ => None,
            },
        }
    }

    pub fn strategy(&self) -> CutStrategy {
        self.strategy
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    /// Window size of a first-n strategy, if already known.
    pub fn first_n_limit(&self) -> Option<usize> {
        self.frozen_limit
    }

    /// Appends cuts in the given order.
    pub fn insert_cuts(&mut self, cuts: impl IntoIterator<Item = Cut>) -> Result<()> {
        for cut in cuts {
            if cut.point.len() != self.dim || cut.subgradient.len() != self.dim {
                return Err(Error::Dimension(format!(
                    "cut of dimension {} inserted into pool of dimension {}",
                    cut.point.len(),
                    self.dim
                )));
            }
            self.cuts.push(cut);
        }
        Ok(())
    }

    /// Cuts visible to `phase`, in global insertion order.
    pub fn view_for(&self, phase: PoolPhase) -> Vec<&Cut> {
        let iterate = match phase {
            PoolPhase::LeastCost => {
                return self
                    .cuts
                    .iter()
                    .filter(|c| c.provenance == Provenance::LeastCost)
                    .collect()
            }
            PoolPhase::Mga(i) => i,
        };
        let earlier = |c: &&Cut| match c.provenance {
            Provenance::LeastCost => true,
            Provenance::Mga(j) => j < iterate,
        };
        match self.strategy {
            CutStrategy::None => Vec::new(),
            CutStrategy::LeastCostOnly => self
                .cuts
                .iter()
                .filter(|c| c.provenance == Provenance::LeastCost)
                .collect(),
            CutStrategy::All => self.cuts.iter().filter(earlier).collect(),
            CutStrategy::FirstN(_) => {
                let limit = self.frozen_limit.unwrap_or(usize::MAX);
                self.cuts.iter().take(limit).filter(earlier).collect()
            }
        }
    }

    /// Records the cuts of a finished MGA iterate as the strategy requires.
    ///
    /// `none` and `least-cost-only` keep nothing, `all` keeps everything, and
    /// `first-n` keeps cuts until the window is full. An adaptive first-n window
    /// is frozen at the pool size reached after [`ADAPTIVE_FIRST_N_ITERATES`]
    /// iterates.
    pub fn absorb(&mut self, cuts: Vec<Cut>) -> Result<()> {
        match self.strategy {
            CutStrategy::None | CutStrategy::LeastCostOnly => Ok(()),
            CutStrategy::All => self.insert_cuts(cuts),
            CutStrategy::FirstN(_) => {
                let room = self
                    .frozen_limit
                    .map_or(usize::MAX, |n| n.saturating_sub(self.cuts.len()));
                self.insert_cuts(cuts.into_iter().take(room))?;
                self.absorbed_iterates += 1;
                if self.frozen_limit.is_none() && self.absorbed_iterates >= ADAPTIVE_FIRST_N_ITERATES {
                    self.frozen_limit = Some(self.cuts.len());
                }
                Ok(())
            }
        }
    }

    /// Fresh pool with the same strategy holding only the least-cost cuts.
    pub fn least_cost_seed(&self) -> Self {
        let mut pool = Self::new(self.dim, self.strategy);
        pool.cuts = self
            .cuts
            .iter()
            .filter(|c| c.provenance == Provenance::LeastCost)
            .cloned()
            .collect();
        pool
    }

    pub fn to_json(&self) -> String {
        let doc = PoolDocument {
            schema_version: POOL_SCHEMA_VERSION,
            pool: self.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("pool serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PoolDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if doc.schema_version != POOL_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: doc.schema_version,
                expected: POOL_SCHEMA_VERSION,
            });
        }
        Ok(doc.pool)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_names_parse() {
        assert_eq!("none".parse::<CutStrategy>().unwrap(), CutStrategy::None);
        assert_eq!(
            "least-cost-only".parse::<CutStrategy>().unwrap(),
            CutStrategy::LeastCostOnly
        );
        assert_eq!("all".parse::<CutStrategy>().unwrap(), CutStrategy::All);
        assert_eq!("first-n".parse::<CutStrategy>().unwrap(), CutStrategy::FirstN(None));
        assert_eq!(
            "first-n:40".parse::<CutStrategy>().unwrap(),
            CutStrategy::FirstN(Some(40))
        );
        assert!("first-n:x".parse::<CutStrategy>().is_err());
    }

    fn cut(period: usize, provenance: Provenance) -> Cut {
        Cut {
            period,
            point: vec![0.0],
            value: 1.0,
            subgradient: vec![-1.0],
            provenance,
            birth_iteration: 1,
        }
    }

    fn filled(strategy: CutStrategy, lc: usize, per_iterate: &[usize]) -> CutPool {
        let mut pool = CutPool::new(1, strategy);
        pool.insert_cuts((0..lc).map(|i| cut(i % 4, Provenance::LeastCost)))
            .unwrap();
        for (it, &k) in per_iterate.iter().enumerate() {
            pool.insert_cuts((0..k).map(|i| cut(i % 4, Provenance::Mga(it))))
                .unwrap();
        }
        pool
    }

    #[test]
    fn evaluate_cut_arithmetic() {
        let c = Cut {
            period: 0,
            point: vec![1.0],
            value: 5.0,
            subgradient: vec![2.0],
            provenance: Provenance::LeastCost,
            birth_iteration: 1,
        };
        assert_eq!(evaluate_cut(&c, &[3.0]).unwrap(), 9.0);
        assert_eq!(evaluate_cut(&c, &[1.0]).unwrap(), 5.0);
        assert!(evaluate_cut(&c, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn none_strategy_views_are_empty() {
        let pool = filled(CutStrategy::None, 8, &[4, 4, 4]);
        assert!(pool.view_for(PoolPhase::Mga(3)).is_empty());
    }

    #[test]
    fn least_cost_only_view() {
        let pool = filled(CutStrategy::LeastCostOnly, 48, &[100, 100]);
        let view = pool.view_for(PoolPhase::Mga(2));
        assert_eq!(view.len(), 48);
        assert!(view.iter().all(|c| c.provenance == Provenance::LeastCost));
    }

    #[test]
    fn first_n_view_respects_insertion_order() {
        let pool = filled(CutStrategy::FirstN(Some(100)), 50, &[125, 125]);
        let view = pool.view_for(PoolPhase::Mga(2));
        assert_eq!(view.len(), 100);
        for (a, b) in view.iter().zip(pool.cuts()) {
            assert!(std::ptr::eq(*a, b));
        }
    }

    #[test]
    fn all_view_excludes_later_iterates() {
        let pool = filled(CutStrategy::All, 6, &[3, 3, 3]);
        assert_eq!(pool.view_for(PoolPhase::Mga(1)).len(), 9);
        assert_eq!(pool.view_for(PoolPhase::Mga(3)).len(), 15);
    }

    #[test]
    fn insert_appends_in_order() {
        let mut pool = CutPool::new(1, CutStrategy::All);
        pool.insert_cuts((0..52).map(|p| cut(p, Provenance::LeastCost)))
            .unwrap();
        assert_eq!(pool.len(), 52);
        pool.insert_cuts(Vec::new()).unwrap();
        assert_eq!(pool.len(), 52);
        pool.insert_cuts(vec![cut(99, Provenance::Mga(0))]).unwrap();
        assert_eq!(pool.cuts()[0].period, 0);
        assert_eq!(pool.cuts()[52].period, 99);
    }

    #[test]
    fn insert_rejects_wrong_dimension() {
        let mut pool = CutPool::new(2, CutStrategy::All);
        assert!(pool.insert_cuts(vec![cut(0, Provenance::LeastCost)]).is_err());
    }

    #[test]
    fn absorb_follows_strategy() {
        let mut pool = filled(CutStrategy::LeastCostOnly, 4, &[]);
        pool.absorb(vec![cut(0, Provenance::Mga(0))]).unwrap();
        assert_eq!(pool.len(), 4);

        let mut pool = filled(CutStrategy::FirstN(Some(6)), 4, &[]);
        pool.absorb((0..5).map(|_| cut(0, Provenance::Mga(0))).collect())
            .unwrap();
        assert_eq!(pool.len(), 6);
    }

    #[test]
    fn adaptive_first_n_freezes_after_five_iterates() {
        let mut pool = filled(CutStrategy::FirstN(None), 4, &[]);
        for it in 0..ADAPTIVE_FIRST_N_ITERATES {
            assert_eq!(pool.first_n_limit(), None);
            pool.absorb((0..3).map(|_| cut(0, Provenance::Mga(it))).collect())
                .unwrap();
        }
        assert_eq!(pool.first_n_limit(), Some(4 + 3 * ADAPTIVE_FIRST_N_ITERATES));
        pool.absorb(vec![cut(0, Provenance::Mga(9))]).unwrap();
        assert_eq!(pool.len(), 4 + 3 * ADAPTIVE_FIRST_N_ITERATES);
    }

    #[test]
    fn json_round_trip() {
        let pool = filled(CutStrategy::FirstN(Some(7)), 3, &[2]);
        let back = CutPool::from_json(&pool.to_json()).unwrap();
        assert_eq!(back, pool);
        let bad = pool.to_json().replace("\"schema_version\": 1", "\"schema_version\": 9");
        assert!(matches!(CutPool::from_json(&bad), Err(Error::SchemaVersion { .. })));
    }
}

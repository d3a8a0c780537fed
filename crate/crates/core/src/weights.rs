//! MGA objective weight vectors: random directions, variable min/max over groups,
//! and a combination of the two.
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::derive_seed;

/// How a weight vector was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMethod {
    Random,
    /// `sign = +1` minimises the group total, `-1` maximises it.
    MinMax {
        group: usize,
        sign: i8,
    },
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgaWeightVector {
    pub weights: Vec<f64>,
    pub method: WeightMethod,
    pub seed: Option<u64>,
}

impl MgaWeightVector {
    /// A hand-specified vector.
    pub fn explicit(weights: Vec<f64>) -> Self {
        Self {
            weights,
            method: WeightMethod::Explicit,
            seed: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0)
    }
}

/// Weights drawn independently and uniformly from `[-1, 1]`.
pub fn random_vector(n: usize, seed: u64) -> Result<MgaWeightVector> {
    if n == 0 {
        return Err(Error::InvalidArgument("random weight vector needs n >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    // An all-zero draw is practically impossible but would violate the contract.
    if weights.iter().all(|&w| w == 0.0) {
        weights[0] = 1.0;
    }
    Ok(MgaWeightVector {
        weights,
        method: WeightMethod::Random,
        seed: Some(seed),
    })
}

/// Two vectors per group: `+1` on its members (minimise) then `-1` (maximise).
pub fn variable_minmax(n: usize, groups: &[Vec<usize>]) -> Result<Vec<MgaWeightVector>> {
    let mut out = Vec::with_capacity(2 * groups.len());
    for (g, members) in groups.iter().enumerate() {
        if members.is_empty() {
            return Err(Error::InvalidArgument(format!("group {g} is empty")));
        }
        if let Some(&bad) = members.iter().find(|&&j| j >= n) {
            return Err(Error::InvalidArgument(format!(
                "group {g} references index {bad} outside dimension {n}"
            )));
        }
        for sign in [1i8, -1] {
            let mut weights = vec![0.0; n];
            for &j in members {
                weights[j] = f64::from(sign);
            }
            out.push(MgaWeightVector {
                weights,
                method: WeightMethod::MinMax { group: g, sign },
                seed: None,
            });
        }
    }
    Ok(out)
}

/// `⌈fraction·total⌉` min/max vectors (cycling through the groups in order)
/// followed by random vectors for the remainder.
pub fn combination_set(
    n: usize,
    groups: &[Vec<usize>],
    total: usize,
    minmax_fraction: f64,
    seed: u64,
) -> Result<Vec<MgaWeightVector>> {
    if !(0.0..=1.0).contains(&minmax_fraction) {
        return Err(Error::InvalidArgument(format!(
            "minmax fraction {minmax_fraction} outside [0, 1]"
        )));
    }
    let n_minmax = ((minmax_fraction * total as f64) - 1e-9).ceil().max(0.0) as usize;
    let n_minmax = n_minmax.min(total);
    let mut out = Vec::with_capacity(total);
    if n_minmax > 0 {
        if groups.is_empty() {
            return Err(Error::InvalidArgument(
                "min/max vectors requested but no variable groups given".into(),
            ));
        }
        let cycle = variable_minmax(n, groups)?;
        out.extend(cycle.iter().cycle().take(n_minmax).cloned());
    }
    for k in n_minmax..total {
        out.push(random_vector(n, derive_seed(seed, &format!("random-vector-{k}")))?);
    }
    Ok(out)
}

//! Backend-neutral linear program carrier.
use serde::{Deserialize, Serialize};

use crate::LpError;

/// Row sense. Problems are always minimised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

/// One sparse constraint row: `coeffs · x (sense) rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// A minimisation LP or MILP with bounded columns and sparse rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
    pub rows: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Adds a continuous column and returns its index.
    pub fn add_column(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.integer.push(false);
        self.objective.len() - 1
    }

    pub fn add_integer_column(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        let j = self.add_column(cost, lower, upper);
        self.integer[j] = true;
        j
    }

    /// Adds a row and returns its index. Zero coefficients are dropped.
    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: RowSense, rhs: f64) -> usize {
        let coeffs = coeffs.into_iter().filter(|&(_, a)| a != 0.0).collect();
        self.rows.push(Constraint { coeffs, sense, rhs });
        self.rows.len() - 1
    }

    pub fn has_integrality(&self) -> bool {
        self.integer.iter().any(|&b| b)
    }

    /// Copy of the problem with every integrality flag cleared.
    pub fn relaxed(&self) -> Self {
        let mut lp = self.clone();
        lp.integer.iter_mut().for_each(|b| *b = false);
        lp
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn row_activity(&self, row: usize, x: &[f64]) -> f64 {
        self.rows[row].coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Largest absolute violation over rows and column bounds.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in self.rows.iter().enumerate() {
            let act = self.row_activity(i, x);
            let v = match row.sense {
                RowSense::Le => act - row.rhs,
                RowSense::Ge => row.rhs - act,
                RowSense::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }

    /// Checks column-count consistency and finite data.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        for (what, len) in [
            ("lower", self.lower.len()),
            ("upper", self.upper.len()),
            ("integer", self.integer.len()),
        ] {
            if len != n {
                return Err(LpError::DimensionMismatch(format!(
                    "{what} has {len} entries, objective has {n}"
                )));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::InvalidData(format!("row {i} has non-finite rhs")));
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(LpError::DimensionMismatch(format!(
                        "row {i} references column {j} but only {n} columns exist"
                    )));
                }
                if !a.is_finite() {
                    return Err(LpError::InvalidData(format!("row {i} has non-finite coefficient")));
                }
            }
        }
        for j in 0..n {
            if !self.objective[j].is_finite() {
                return Err(LpError::InvalidData(format!("column {j} has non-finite cost")));
            }
            if self.lower[j] > self.upper[j] || self.lower[j] == f64::INFINITY {
                return Err(LpError::InvalidData(format!(
                    "column {j} has empty bound interval [{}, {}]",
                    self.lower[j], self.upper[j]
                )));
            }
        }
        Ok(())
    }
}

/// Outcome classification of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Limit,
}

/// Result of an LP or MILP solve.
///
/// Row duals follow the sensitivity convention `dual_i = d(objective)/d(rhs_i)` for
/// the minimisation problem, so `Le` rows carry nonpositive duals, `Ge` rows
/// nonnegative duals, and `Eq` rows are free.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    pub duals: Option<Vec<f64>>,
    pub objective: f64,
    pub is_basic: bool,
}

impl SolveResult {
    pub fn not_optimal(status: SolveStatus) -> Self {
        Self {
            status,
            primal: Vec::new(),
            duals: None,
            objective: f64::NAN,
            is_basic: false,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Dual objective `Σ rhs_i · dual_i + Σ reduced-cost bound terms`, for weak-duality checks.
    ///
    /// Column reduced costs are recovered as `c - Aᵀy` and attributed to whichever
    /// bound is finite on the side their sign requires.
    pub fn dual_objective(&self, lp: &LinearProgram) -> Option<f64> {
        let y = self.duals.as_ref()?;
        let mut reduced = lp.objective.clone();
        let mut value = 0.0;
        for (i, row) in lp.rows.iter().enumerate() {
            value += row.rhs * y[i];
            for &(j, a) in &row.coeffs {
                reduced[j] -= a * y[i];
            }
        }
        for (j, &d) in reduced.iter().enumerate() {
            if d > 0.0 {
                value += d * lp.lower[j];
            } else if d < 0.0 {
                value += d * lp.upper[j];
            }
        }
        Some(value)
    }
}

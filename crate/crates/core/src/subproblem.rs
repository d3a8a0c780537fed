//! Cut-generating operational subproblem of one period.
//!
//! With `x` fixed, the period LP is `min d·y s.t. B y <= b - A x, y ∈ Y`. If `μ`
//! are the (nonpositive) duals of the coupling rows, then `λ = -Aᵀμ` is a
//! subgradient of the period cost `f_p` at `x`.
use cga_lp::{LinearProgram, LpBackend, RowSense, SolveStatus};

use crate::cutpool::{Cut, Provenance};
use crate::error::{Error, Result};
use crate::model::{Instance, OperationalBlock, OperationalDecision};

/// Reusable LP skeleton of one period; only the coupling right-hand sides change
/// between solves.
#[derive(Debug, Clone)]
pub struct PeriodSubproblem {
    period: usize,
    lp: LinearProgram,
    coupling_rows: usize,
    shortfall_start: usize,
}

/// Optimal operations of one period at a fixed planning vector.
#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub value: f64,
    pub subgradient: Vec<f64>,
    pub decision: OperationalDecision,
}

impl PeriodSubproblem {
    /// `period` is the position of the block in `instance.periods`.
    pub fn new(instance: &Instance, period: usize) -> Self {
        let block = &instance.periods[period];
        let mut lp = LinearProgram::new();
        for j in 0..block.op_dim() {
            lp.add_column(block.op_cost[j], block.op_lower[j], block.op_upper[j]);
        }
        let shortfall_start = lp.num_cols();
        let mut shortfall_col = vec![None; block.op_constraints.len()];
        for k in block.balance_rows() {
            shortfall_col[k] = Some(lp.add_column(block.slack_penalty, 0.0, f64::INFINITY));
        }
        for (k, coeffs) in block.op_matrix.by_row().into_iter().enumerate() {
            lp.add_row(coeffs, RowSense::Le, block.rhs[k]);
        }
        for (k, row) in block.op_constraints.iter().enumerate() {
            let mut coeffs = row.coeffs.clone();
            if let Some(s) = shortfall_col[k] {
                coeffs.push((s, 1.0));
            }
            lp.add_row(coeffs, row.sense, row.rhs);
        }
        Self {
            period,
            lp,
            coupling_rows: block.coupling_rows(),
            shortfall_start,
        }
    }

    pub fn period(&self) -> usize {
        self.period
    }

    /// Solves at `x` and returns the period cost, its subgradient and the dispatch.
    pub fn solve(
        &mut self,
        block: &OperationalBlock,
        x: &[f64],
        backend: &mut dyn LpBackend,
    ) -> Result<SubproblemSolution> {
        if x.len() != block.coupling.cols {
            return Err(Error::Dimension(format!(
                "planning vector has {} entries, coupling matrix has {} columns",
                x.len(),
                block.coupling.cols
            )));
        }
        let ax = block.coupling.mul_vec(x);
        for k in 0..self.coupling_rows {
            self.lp.rows[k].rhs = block.rhs[k] - ax[k];
        }
        let res = backend.solve_lp(&self.lp, true)?;
        if res.status != SolveStatus::Optimal {
            return Err(Error::Solver {
                context: format!("period {} subproblem", block.id),
                status: res.status,
            });
        }
        let duals = res.duals.as_ref().expect("LP solve returns duals");
        let mu = &duals[..self.coupling_rows];
        // Dual round-off leaves entries like 1e-13 that solvers reject as matrix values.
        let subgradient: Vec<f64> = block
            .coupling
            .mul_transpose(mu)
            .into_iter()
            .map(|v| if v.abs() <= 1e-9 { 0.0 } else { -v })
            .collect();
        let decision = OperationalDecision {
            dispatch: res.primal[..self.shortfall_start].to_vec(),
            shortfall: res.primal[self.shortfall_start..].to_vec(),
        };
        Ok(SubproblemSolution {
            value: block.cost_of(&decision),
            subgradient,
            decision,
        })
    }
}

/// Solves the subproblem of period `period` at `x` and wraps the result as a cut.
pub fn solve_subproblem(
    instance: &Instance,
    period: usize,
    x: &[f64],
    backend: &mut dyn LpBackend,
) -> Result<(Cut, OperationalDecision)> {
    let mut sp = PeriodSubproblem::new(instance, period);
    let sol = sp.solve(&instance.periods[period], x, backend)?;
    let cut = Cut {
        period,
        point: x.to_vec(),
        value: sol.value,
        subgradient: sol.subgradient,
        provenance: Provenance::LeastCost,
        birth_iteration: 0,
    };
    Ok((cut, sol.decision))
}

//! Monolithic least-cost and MGA problems solved as a single LP/MILP.
use std::ops::Range;

use cga_lp::{LinearProgram, LpBackend, RowSense, SolveStatus};

use crate::error::{Error, Result};
use crate::model::{clean_planning, Instance, OperationalDecision, RunStatus, SolutionRecord};
use crate::weights::MgaWeightVector;

/// Columns of one period inside the monolithic LP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodColumns {
    pub dispatch: Range<usize>,
    pub shortfall: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub planning: Range<usize>,
    pub periods: Vec<PeriodColumns>,
}

/// A monolithic LP together with the map from model quantities to LP columns.
#[derive(Debug, Clone)]
pub struct MonolithBuild {
    pub lp: LinearProgram,
    pub columns: ColumnMap,
    /// Present iff the build is an MGA build.
    pub budget_row: Option<usize>,
    pub weights: Option<Vec<f64>>,
}

/// Appends `x` columns, `X` rows and every period block. Returns the column map
/// and, per period, the cost vector over its columns.
fn build_common(instance: &Instance, planning_obj: &[f64], op_in_objective: bool) -> (LinearProgram, ColumnMap) {
    let pl = &instance.planning;
    let n = pl.dim();
    let mut lp = LinearProgram::new();
    for j in 0..n {
        lp.add_column(planning_obj[j], pl.lower[j], pl.upper[j]);
        lp.integer[j] = pl.integer[j];
    }
    for row in &pl.constraints {
        lp.add_row(row.coeffs.clone(), row.sense, row.rhs);
    }
    let mut periods = Vec::with_capacity(instance.num_periods());
    for block in &instance.periods {
        let start = lp.num_cols();
        for j in 0..block.op_dim() {
            let cost = if op_in_objective { block.op_cost[j] } else { 0.0 };
            lp.add_column(cost, block.op_lower[j], block.op_upper[j]);
        }
        let dispatch = start..lp.num_cols();
        let mut shortfall_col = vec![None; block.op_constraints.len()];
        for k in block.balance_rows() {
            let cost = if op_in_objective { block.slack_penalty } else { 0.0 };
            shortfall_col[k] = Some(lp.add_column(cost, 0.0, f64::INFINITY));
        }
        let shortfall = dispatch.end..lp.num_cols();

        let coupling = block.coupling.by_row();
        for (k, op_row) in block.op_matrix.by_row().into_iter().enumerate() {
            let mut coeffs = coupling[k].clone();
            coeffs.extend(op_row.into_iter().map(|(j, a)| (start + j, a)));
            lp.add_row(coeffs, RowSense::Le, block.rhs[k]);
        }
        for (k, row) in block.op_constraints.iter().enumerate() {
            let mut coeffs: Vec<_> = row.coeffs.iter().map(|&(j, a)| (start + j, a)).collect();
            if let Some(s) = shortfall_col[k] {
                coeffs.push((s, 1.0));
            }
            lp.add_row(coeffs, row.sense, row.rhs);
        }
        periods.push(PeriodColumns { dispatch, shortfall });
    }
    (
        lp,
        ColumnMap {
            planning: 0..n,
            periods,
        },
    )
}

/// Least-cost problem: `min c·x + Σ_p d_p·y_p` over the full two-block model.
pub fn build_least_cost(instance: &Instance) -> Result<MonolithBuild> {
    instance.ensure_valid()?;
    let (lp, columns) = build_common(instance, &instance.planning.cost, true);
    Ok(MonolithBuild {
        lp,
        columns,
        budget_row: None,
        weights: None,
    })
}

/// MGA problem: `min w·x` subject to the full model and total cost `<= epsilon`.
pub fn build_mga_monolith(instance: &Instance, w: &MgaWeightVector, epsilon: f64) -> Result<MonolithBuild> {
    instance.ensure_valid()?;
    let n = instance.planning_dim();
    if w.weights.len() != n {
        return Err(Error::Dimension(format!(
            "weight vector has {} entries, planning dimension is {n}",
            w.weights.len()
        )));
    }
    let (mut lp, columns) = build_common(instance, &w.weights, false);
    let mut budget: Vec<(usize, f64)> = instance.planning.cost.iter().copied().enumerate().collect();
    for (block, cols) in instance.periods.iter().zip(&columns.periods) {
        budget.extend(cols.dispatch.clone().zip(block.op_cost.iter().copied()));
        budget.extend(cols.shortfall.clone().map(|j| (j, block.slack_penalty)));
    }
    let row = lp.add_row(budget, RowSense::Le, epsilon);
    Ok(MonolithBuild {
        lp,
        columns,
        budget_row: Some(row),
        weights: Some(w.weights.clone()),
    })
}

/// Solves a monolithic build and reports it in the same shape as the decomposed solvers.
pub fn solve_monolith(
    build: &MonolithBuild,
    instance: &Instance,
    backend: &mut dyn LpBackend,
) -> Result<SolutionRecord> {
    let n = instance.planning_dim();
    let res = backend.solve(&build.lp, false)?;
    match res.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Ok(SolutionRecord::infeasible(n, Vec::new())),
        status => {
            return Err(Error::Solver {
                context: "monolithic solve".into(),
                status,
            })
        }
    }
    let planning = clean_planning(instance, &res.primal[build.columns.planning.clone()], true)?;
    let period_costs: Vec<f64> = instance
        .periods
        .iter()
        .zip(&build.columns.periods)
        .map(|(block, cols)| {
            block.cost_of(&OperationalDecision {
                dispatch: res.primal[cols.dispatch.clone()].to_vec(),
                shortfall: res.primal[cols.shortfall.clone()].to_vec(),
            })
        })
        .collect();
    let total_cost = instance.planning_cost(&planning) + period_costs.iter().sum::<f64>();
    let mga_objective = build
        .weights
        .as_ref()
        .map(|w| w.iter().zip(&planning).map(|(a, b)| a * b).sum());
    Ok(SolutionRecord {
        planning,
        period_costs,
        total_cost,
        mga_objective,
        trace: Vec::new(),
        status: RunStatus::Converged,
    })
}

/// Optimal operational decisions of every period recovered from a monolithic primal.
pub fn operational_decisions(build: &MonolithBuild, primal: &[f64]) -> Vec<OperationalDecision> {
    build
        .columns
        .periods
        .iter()
        .map(|cols| OperationalDecision {
            dispatch: primal[cols.dispatch.clone()].to_vec(),
            shortfall: primal[cols.shortfall.clone()].to_vec(),
        })
        .collect()
}

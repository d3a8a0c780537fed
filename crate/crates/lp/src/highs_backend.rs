//! Adapter for the HiGHS solver.
use highs::{ColProblem, HighsModelStatus, Model, Sense};

use crate::problem::{LinearProgram, RowSense, SolveResult, SolveStatus};
use crate::{LpBackend, LpError};

/// HiGHS dual simplex for LPs (basic solutions) and HiGHS branch and cut for MILPs.
///
/// HiGHS reports row duals as `d(objective)/d(row bound)` for minimisation, which is
/// already the convention of [`SolveResult`], so no sign flip is needed.
#[derive(Debug, Clone)]
pub struct HighsBackend {
    pub presolve: bool,
    pub feasibility_tol: f64,
    pub time_limit: Option<f64>,
}

impl Default for HighsBackend {
    fn default() -> Self {
        Self {
            presolve: true,
            feasibility_tol: 1e-9,
            time_limit: None,
        }
    }
}

impl HighsBackend {
    fn build(&self, lp: &LinearProgram, integral: bool) -> Model {
        let mut pb = ColProblem::new();
        let rows: Vec<_> = lp
            .rows
            .iter()
            .map(|r| match r.sense {
                RowSense::Le => pb.add_row(..=r.rhs),
                RowSense::Ge => pb.add_row(r.rhs..),
                RowSense::Eq => pb.add_row(r.rhs..=r.rhs),
            })
            .collect();
        let mut col_factors: Vec<Vec<(highs::Row, f64)>> = vec![Vec::new(); lp.num_cols()];
        for (i, r) in lp.rows.iter().enumerate() {
            for &(j, a) in &r.coeffs {
                col_factors[j].push((rows[i], a));
            }
        }
        for (j, factors) in col_factors.into_iter().enumerate() {
            let (l, u) = (lp.lower[j], lp.upper[j]);
            let int = integral && lp.integer[j];
            pb.add_column_with_integrality(lp.objective[j], l..=u, factors, int);
        }
        let mut model = pb.optimise(Sense::Minimise);
        model.make_quiet();
        model.set_option("presolve", if self.presolve { "on" } else { "off" });
        model.set_option("primal_feasibility_tolerance", self.feasibility_tol);
        model.set_option("dual_feasibility_tolerance", self.feasibility_tol);
        if integral {
            model.set_option("mip_rel_gap", 0.0);
            model.set_option("mip_abs_gap", 1e-9);
            model.set_option("mip_feasibility_tolerance", 1e-9);
        } else {
            model.set_option("solver", "simplex");
        }
        if let Some(t) = self.time_limit {
            model.set_option("time_limit", t);
        }
        model
    }

    fn run(&self, lp: &LinearProgram, integral: bool, need_duals: bool) -> Result<SolveResult, LpError> {
        let solved = self
            .build(lp, integral)
            .try_solve()
            .map_err(|s| LpError::Backend(format!("HiGHS run failed: {s:?}")))?;
        let status = match solved.status() {
            HighsModelStatus::Optimal => SolveStatus::Optimal,
            HighsModelStatus::ModelEmpty if lp.num_cols() == 0 => SolveStatus::Optimal,
            HighsModelStatus::Infeasible => SolveStatus::Infeasible,
            HighsModelStatus::Unbounded => SolveStatus::Unbounded,
            HighsModelStatus::UnboundedOrInfeasible => {
                // Presolve cannot tell these apart; the unpresolved run can.
                if self.presolve {
                    let plain = HighsBackend {
                        presolve: false,
                        ..self.clone()
                    };
                    return plain.run(lp, integral, need_duals);
                }
                SolveStatus::Infeasible
            }
            HighsModelStatus::ReachedTimeLimit
            | HighsModelStatus::ReachedIterationLimit
            | HighsModelStatus::ReachedSolutionLimit
            | HighsModelStatus::ReachedInterrupt => SolveStatus::Limit,
            other => return Err(LpError::Backend(format!("HiGHS status {other:?}"))),
        };
        if status != SolveStatus::Optimal {
            return Ok(SolveResult::not_optimal(status));
        }
        let sol = solved.get_solution();
        let mut primal = sol.columns().to_vec();
        if integral {
            for (j, v) in primal.iter_mut().enumerate() {
                if lp.integer[j] {
                    *v = v.round();
                }
            }
        }
        let duals = (!integral && need_duals).then(|| sol.dual_rows().to_vec());
        let objective = lp.objective_value(&primal);
        Ok(SolveResult {
            status,
            primal,
            duals,
            objective,
            is_basic: !integral,
        })
    }
}

impl LpBackend for HighsBackend {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn lp_impl(&mut self, lp: &LinearProgram, need_duals: bool) -> Result<SolveResult, LpError> {
        self.run(lp, false, need_duals)
    }

    fn milp_impl(&mut self, lp: &LinearProgram) -> Result<SolveResult, LpError> {
        self.run(lp, true, false)
    }
}

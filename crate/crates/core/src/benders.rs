//! Multi-cut Benders decomposition of the least-cost problem.
//!
//! Each iteration solves every period at the current planning iterate, adds one
//! cut per period, and re-solves the master `min c·x + Σ θ_p` over the cuts. The
//! next iterate is the master optimum (Kelley) unless a different
//! [`IterateSelector`] is supplied. Instances with integer planning columns are
//! solved twice: first relaxed, then with integrality restored and the upper
//! bound reset, keeping all cuts.
use std::time::Instant;

use cga_lp::{LinearProgram, LpBackend, RowSense, SolveStatus};

use crate::config::AlgoConfig;
use crate::cutpool::{Cut, CutPool, PoolPhase, Provenance};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::model::{clean_planning, Instance, IterationRecord, OperationalDecision, Phase, RunStatus, SolutionRecord};
use crate::subproblem::PeriodSubproblem;

pub use crate::subproblem::solve_subproblem;

/// True costs of every period at one planning vector.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub x: Vec<f64>,
    pub period_costs: Vec<f64>,
    pub subgradients: Vec<Vec<f64>>,
    pub decisions: Vec<OperationalDecision>,
    pub total_cost: f64,
}

impl Evaluation {
    /// One cut per period, in period order.
    pub fn cuts(&self, provenance: Provenance, iteration: usize) -> Vec<Cut> {
        self.period_costs
            .iter()
            .zip(&self.subgradients)
            .enumerate()
            .map(|(p, (&value, g))| Cut {
                period: p,
                point: self.x.clone(),
                value,
                subgradient: g.clone(),
                provenance,
                birth_iteration: iteration,
            })
            .collect()
    }
}

/// Holds one reusable subproblem per period.
#[derive(Debug, Clone)]
pub struct PeriodEvaluator {
    subproblems: Vec<PeriodSubproblem>,
}

impl PeriodEvaluator {
    pub fn new(instance: &Instance) -> Self {
        Self {
            subproblems: (0..instance.num_periods())
                .map(|p| PeriodSubproblem::new(instance, p))
                .collect(),
        }
    }

    /// Solves every period at `x` (concurrently when the executor allows).
    pub fn evaluate(&mut self, instance: &Instance, x: &[f64], exec: &Executor) -> Result<Evaluation> {
        let sols = exec.map(&mut self.subproblems, |sp, backend| {
            let block = &instance.periods[sp.period()];
            sp.solve(block, x, backend)
        })?;
        let mut period_costs = Vec::with_capacity(sols.len());
        let mut subgradients = Vec::with_capacity(sols.len());
        let mut decisions = Vec::with_capacity(sols.len());
        for s in sols {
            period_costs.push(s.value);
            subgradients.push(s.subgradient);
            decisions.push(s.decision);
        }
        let total_cost = instance.planning_cost(x) + period_costs.iter().sum::<f64>();
        Ok(Evaluation {
            x: x.to_vec(),
            period_costs,
            subgradients,
            decisions,
            total_cost,
        })
    }
}

/// `min_j (c·x^j + Σ_p f_p(x^j))` over the evaluated history. The earliest
/// minimiser wins ties. Returns `None` for an empty history.
pub fn compute_upper_bound(history_totals: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &t) in history_totals.iter().enumerate() {
        if best.map_or(true, |(_, b)| t < b) {
            best = Some((j, t));
        }
    }
    best
}

/// Adds the planning columns, `X` rows and one `θ_p >= 0` per period to `lp`.
/// Returns the index of the first `θ` column.
pub(crate) fn add_planning_and_thetas(
    lp: &mut LinearProgram,
    instance: &Instance,
    planning_obj: &[f64],
    theta_obj: f64,
    integral: bool,
) -> usize {
    let pl = &instance.planning;
    for j in 0..pl.dim() {
        lp.add_column(planning_obj[j], pl.lower[j], pl.upper[j]);
        lp.integer[j] = integral && pl.integer[j];
    }
    for row in &pl.constraints {
        lp.add_row(row.coeffs.clone(), row.sense, row.rhs);
    }
    let theta0 = lp.num_cols();
    for _ in 0..instance.num_periods() {
        lp.add_column(theta_obj, 0.0, f64::INFINITY);
    }
    theta0
}

/// `θ_p - λ·x >= f_p(x^j) - λ·x^j` for each cut.
pub(crate) fn add_cut_rows<'a>(lp: &mut LinearProgram, theta0: usize, cuts: impl IntoIterator<Item = &'a Cut>) {
    for cut in cuts {
        let mut coeffs: Vec<(usize, f64)> = cut
            .subgradient
            .iter()
            .enumerate()
            .filter(|(_, &g)| g != 0.0)
            .map(|(j, &g)| (j, -g))
            .collect();
        coeffs.push((theta0 + cut.period, 1.0));
        lp.add_row(coeffs, RowSense::Ge, cut.intercept());
    }
}

/// Least-cost master: `min c·x + Σ θ_p` over the cuts, `X`, and `θ >= 0`.
pub fn build_master_least_cost<'a>(
    instance: &Instance,
    cuts: impl IntoIterator<Item = &'a Cut>,
    integral: bool,
) -> LinearProgram {
    let mut lp = LinearProgram::new();
    let theta0 = add_planning_and_thetas(&mut lp, instance, &instance.planning.cost, 1.0, integral);
    add_cut_rows(&mut lp, theta0, cuts);
    lp
}

/// Optimal master solution split into planning part and objective.
#[derive(Debug, Clone)]
pub struct MasterSolution {
    pub x: Vec<f64>,
    pub thetas: Vec<f64>,
    pub objective: f64,
}

/// Solves a master LP/MILP. `Ok(None)` means the master is infeasible.
pub fn solve_master(
    instance: &Instance,
    lp: &LinearProgram,
    backend: &mut dyn LpBackend,
    context: &str,
) -> Result<Option<MasterSolution>> {
    let res = backend.solve(lp, false)?;
    match res.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Ok(None),
        status => {
            return Err(Error::Solver {
                context: context.into(),
                status,
            })
        }
    }
    let n = instance.planning_dim();
    let x = clean_planning(instance, &res.primal[..n], lp.has_integrality())?;
    Ok(Some(MasterSolution {
        x,
        thetas: res.primal[n..n + instance.num_periods()].to_vec(),
        objective: res.objective,
    }))
}

/// Snapshot of the least-cost iteration handed to an [`IterateSelector`].
#[derive(Debug, Clone)]
pub struct BendersState {
    pub iterate: Vec<f64>,
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub k: usize,
    pub integer_phase: bool,
    pub best_planning: Option<Vec<f64>>,
}

/// Chooses the next planning iterate from the current master optimum.
pub trait IterateSelector {
    fn next_iterate(&mut self, state: &BendersState, master: &MasterSolution) -> Vec<f64>;
}

/// Kelley's rule: the next iterate is the master optimum.
#[derive(Debug, Default, Clone, Copy)]
pub struct Kelley;

impl IterateSelector for Kelley {
    fn next_iterate(&mut self, _state: &BendersState, master: &MasterSolution) -> Vec<f64> {
        master.x.clone()
    }
}

/// Relative gap with the denominator guarded for zero-cost instances.
pub fn relative_gap(ub: f64, lb: f64) -> f64 {
    (ub - lb) / lb.abs().max(1e-9)
}

/// Runs least-cost Benders with Kelley iterates. New cuts are appended to `pool`
/// with least-cost provenance; existing least-cost cuts in `pool` seed the master.
pub fn benders_least_cost(
    instance: &Instance,
    config: &AlgoConfig,
    pool: &mut CutPool,
    exec: &Executor,
) -> Result<SolutionRecord> {
    benders_least_cost_with(instance, config, pool, exec, &mut Kelley)
}

pub fn benders_least_cost_with(
    instance: &Instance,
    config: &AlgoConfig,
    pool: &mut CutPool,
    exec: &Executor,
    selector: &mut dyn IterateSelector,
) -> Result<SolutionRecord> {
    instance.ensure_valid()?;
    if !(config.delta_ls >= 0.0) || config.k_ls < 1 {
        return Err(Error::InvalidArgument("need delta_ls >= 0 and k_ls >= 1".into()));
    }
    if pool.dim() != instance.planning_dim() {
        return Err(Error::Dimension(format!(
            "pool dimension {} differs from planning dimension {}",
            pool.dim(),
            instance.planning_dim()
        )));
    }
    let n = instance.planning_dim();
    let has_integers = instance.has_integrality();
    let mut master_backend = exec.handle();
    let mut evaluator = PeriodEvaluator::new(instance);
    let mut cuts: Vec<Cut> = pool.view_for(PoolPhase::LeastCost).into_iter().cloned().collect();
    let mut trace = Vec::new();

    let t = Instant::now();
    let first = build_master_least_cost(instance, &cuts, false);
    let Some(first) = solve_master(instance, &first, master_backend.as_mut(), "least-cost master")? else {
        return Ok(SolutionRecord::infeasible(n, trace));
    };
    let mut pending_master_secs = t.elapsed().as_secs_f64();

    let mut state = BendersState {
        iterate: first.x,
        upper_bound: f64::INFINITY,
        lower_bound: f64::NEG_INFINITY,
        k: 0,
        integer_phase: false,
        best_planning: None,
    };
    let mut best: Option<Evaluation> = None;

    for k in 1..=config.k_ls {
        state.k = k;
        let t = Instant::now();
        let eval = evaluator.evaluate(instance, &state.iterate, exec)?;
        let subproblem_secs = t.elapsed().as_secs_f64();

        if eval.total_cost < state.upper_bound {
            state.upper_bound = eval.total_cost;
            state.best_planning = Some(eval.x.clone());
            best = Some(eval.clone());
        }
        let new_cuts = eval.cuts(Provenance::LeastCost, k);
        pool.insert_cuts(new_cuts.iter().cloned())?;
        cuts.extend(new_cuts);

        let t = Instant::now();
        let lp = build_master_least_cost(instance, &cuts, state.integer_phase);
        let master = solve_master(instance, &lp, master_backend.as_mut(), "least-cost master")?.ok_or_else(|| {
            Error::Solver {
                context: "least-cost master became infeasible".into(),
                status: SolveStatus::Infeasible,
            }
        })?;
        let master_secs = t.elapsed().as_secs_f64() + std::mem::take(&mut pending_master_secs);
        state.lower_bound = state.lower_bound.max(master.objective);

        let phase = if state.integer_phase {
            Phase::Integer
        } else {
            Phase::Relaxed
        };
        trace.push(IterationRecord {
            iteration: k,
            phase,
            true_cost: eval.total_cost,
            lower_bound: Some(state.lower_bound),
            upper_bound: Some(state.upper_bound),
            master_objective: Some(master.objective),
            budget_ratio: None,
            master_secs,
            subproblem_secs,
        });
        log::debug!(
            "least-cost k={k} phase={phase:?} UB={:.6} LB={:.6}",
            state.upper_bound,
            state.lower_bound
        );

        if relative_gap(state.upper_bound, state.lower_bound) <= config.delta_ls {
            if has_integers && !state.integer_phase {
                state.integer_phase = true;
                state.upper_bound = f64::INFINITY;
                state.lower_bound = f64::NEG_INFINITY;
                state.best_planning = None;
                best = None;
                let t = Instant::now();
                let lp = build_master_least_cost(instance, &cuts, true);
                let master = solve_master(instance, &lp, master_backend.as_mut(), "integer least-cost master")?
                    .ok_or_else(|| Error::Solver {
                        context: "integer least-cost master is infeasible".into(),
                        status: SolveStatus::Infeasible,
                    })?;
                pending_master_secs = t.elapsed().as_secs_f64();
                state.iterate = master.x;
                continue;
            }
            let best = best.expect("upper bound attained by an evaluated iterate");
            return Ok(record_from(best, trace, RunStatus::Converged));
        }
        state.iterate = selector.next_iterate(&state, &master);
    }
    log::warn!("least-cost Benders hit the iteration cap of {}", config.k_ls);
    match best {
        Some(best) => Ok(record_from(best, trace, RunStatus::IterationLimit)),
        None => {
            let mut rec = SolutionRecord::infeasible(n, trace);
            rec.status = RunStatus::IterationLimit;
            Ok(rec)
        }
    }
}

fn record_from(eval: Evaluation, trace: Vec<IterationRecord>, status: RunStatus) -> SolutionRecord {
    SolutionRecord {
        planning: eval.x,
        period_costs: eval.period_costs,
        total_cost: eval.total_cost,
        mga_objective: None,
        trace,
        status,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upper_bound_is_earliest_minimum() {
        assert_eq!(compute_upper_bound(&[10.0, 7.0, 9.0]), Some((1, 7.0)));
        assert_eq!(compute_upper_bound(&[42.0]), Some((0, 42.0)));
        assert_eq!(compute_upper_bound(&[3.0, 1.0, 1.0]), Some((1, 1.0)));
        assert_eq!(compute_upper_bound(&[]), None);
    }

    #[test]
    fn gap_guards_zero_denominator() {
        assert_eq!(relative_gap(0.0, 0.0), 0.0);
        assert!(relative_gap(1.0, 0.0) > 1e8);
        assert!((relative_gap(101.0, 100.0) - 0.01).abs() < 1e-12);
    }
}

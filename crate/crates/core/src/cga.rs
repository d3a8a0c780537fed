//! Cutting-plane MGA: explores near-optimal planning decisions by minimising a
//! weight vector over a cost budget, with operational costs approximated by cuts.
use std::time::Instant;

use cga_lp::{LinearProgram, RowSense};
use serde::{Deserialize, Serialize};

use crate::benders::{add_cut_rows, add_planning_and_thetas, solve_master, PeriodEvaluator};
use crate::config::AlgoConfig;
use crate::cutpool::{Cut, Provenance};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::model::{Instance, IterationRecord, Phase, RunStatus, SolutionRecord};
use crate::weights::MgaWeightVector;

/// Cost budget derived from the least-cost optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub least_cost: f64,
    pub beta: f64,
    pub epsilon: f64,
}

/// `ε = (1 + beta)·least_cost`.
pub fn compute_budget(least_cost: f64, beta: f64) -> Result<Budget> {
    if !least_cost.is_finite() || least_cost < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "least-cost value {least_cost} must be finite and >= 0"
        )));
    }
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be >= 0, got {beta}")));
    }
    if beta > 1.0 {
        log::warn!("beta = {beta} allows more than double the least cost");
    }
    Ok(Budget {
        least_cost,
        beta,
        epsilon: (1.0 + beta) * least_cost,
    })
}

/// `min w·x` subject to `c·x + Σ θ_p <= epsilon`, the cuts, `X` and `θ >= 0`.
pub fn build_mga_master<'a>(
    instance: &Instance,
    w: &MgaWeightVector,
    epsilon: f64,
    cuts: impl IntoIterator<Item = &'a Cut>,
    integral: bool,
) -> Result<LinearProgram> {
    let n = instance.planning_dim();
    if w.dim() != n {
        return Err(Error::Dimension(format!(
            "weight vector has {} entries, planning dimension is {n}",
            w.dim()
        )));
    }
    let mut lp = LinearProgram::new();
    let theta0 = add_planning_and_thetas(&mut lp, instance, &w.weights, 0.0, integral);
    let mut budget: Vec<(usize, f64)> = instance.planning.cost.iter().copied().enumerate().collect();
    budget.extend((0..instance.num_periods()).map(|p| (theta0 + p, 1.0)));
    lp.add_row(budget, RowSense::Le, epsilon);
    add_cut_rows(&mut lp, theta0, cuts);
    Ok(lp)
}

/// `true_cost <= ε(1 + δ_MGA)`, inclusive.
pub fn check_budget_termination(true_cost: f64, epsilon: f64, delta_mga: f64) -> bool {
    true_cost <= epsilon * (1.0 + delta_mga)
}

/// Result of one CGA solve plus the cuts it generated, in generation order.
#[derive(Debug, Clone)]
pub struct CgaOutcome {
    pub record: SolutionRecord,
    pub new_cuts: Vec<Cut>,
}

/// Solves the MGA problem for one weight vector.
///
/// `cuts` seeds the master. Every round of subproblem solves produces one cut per
/// period tagged with `Provenance::Mga(iterate)`; these are returned so the caller
/// can share them according to its cut strategy.
pub fn cga_solve_one<'a>(
    instance: &Instance,
    w: &MgaWeightVector,
    budget: &Budget,
    cuts: impl IntoIterator<Item = &'a Cut>,
    iterate: usize,
    config: &AlgoConfig,
    exec: &Executor,
) -> Result<CgaOutcome> {
    instance.ensure_valid()?;
    if config.k_mga < 1 || !(config.delta_mga >= 0.0) {
        return Err(Error::InvalidArgument("need delta_mga >= 0 and k_mga >= 1".into()));
    }
    let n = instance.planning_dim();
    let has_integers = instance.has_integrality();
    let mut master_backend = exec.handle();
    let mut evaluator = PeriodEvaluator::new(instance);
    let mut active: Vec<Cut> = cuts.into_iter().cloned().collect();
    let mut new_cuts = Vec::new();
    let mut trace = Vec::new();
    let mut integer_phase = false;
    let mut last = None;

    for k in 1..=config.k_mga {
        let t = Instant::now();
        let lp = build_mga_master(instance, w, budget.epsilon, &active, integer_phase)?;
        let Some(master) = solve_master(instance, &lp, master_backend.as_mut(), "MGA master")? else {
            log::info!("MGA master for iterate {iterate} is infeasible at k={k}");
            return Ok(CgaOutcome {
                record: SolutionRecord::infeasible(n, trace),
                new_cuts,
            });
        };
        let master_secs = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let eval = evaluator.evaluate(instance, &master.x, exec)?;
        let subproblem_secs = t.elapsed().as_secs_f64();

        let fresh = eval.cuts(Provenance::Mga(iterate), k);
        active.extend(fresh.iter().cloned());
        new_cuts.extend(fresh);

        let phase = if integer_phase { Phase::Integer } else { Phase::Relaxed };
        trace.push(IterationRecord {
            iteration: k,
            phase,
            true_cost: eval.total_cost,
            lower_bound: None,
            upper_bound: None,
            master_objective: Some(master.objective),
            budget_ratio: Some(eval.total_cost / budget.epsilon),
            master_secs,
            subproblem_secs,
        });

        if check_budget_termination(eval.total_cost, budget.epsilon, config.delta_mga) {
            if has_integers && !integer_phase {
                integer_phase = true;
                continue;
            }
            let mga_objective = Some(w.objective(&eval.x));
            return Ok(CgaOutcome {
                record: SolutionRecord {
                    planning: eval.x,
                    period_costs: eval.period_costs,
                    total_cost: eval.total_cost,
                    mga_objective,
                    trace,
                    status: RunStatus::Converged,
                },
                new_cuts,
            });
        }
        last = Some(eval);
    }
    log::warn!("MGA iterate {iterate} hit the iteration cap of {}", config.k_mga);
    let eval = last.expect("at least one iteration ran");
    let mga_objective = Some(w.objective(&eval.x));
    Ok(CgaOutcome {
        record: SolutionRecord {
            planning: eval.x,
            period_costs: eval.period_costs,
            total_cost: eval.total_cost,
            mga_objective,
            trace,
            status: RunStatus::IterationLimit,
        },
        new_cuts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_scales_least_cost() {
        let b = compute_budget(100.0, 0.1).unwrap();
        assert!((b.epsilon - 110.0).abs() < 1e-12);
        assert_eq!(compute_budget(100.0, 0.0).unwrap().epsilon, 100.0);
        assert!(compute_budget(100.0, -0.1).is_err());
        assert!(compute_budget(f64::NAN, 0.1).is_err());
        assert!(compute_budget(-1.0, 0.1).is_err());
        assert!((compute_budget(10.0, 1.5).unwrap().epsilon - 25.0).abs() < 1e-12);
    }

    #[test]
    fn termination_is_inclusive() {
        assert!(check_budget_termination(110.0, 110.0, 0.0));
        assert!(check_budget_termination(110.4, 110.0, 0.005));
        assert!(!check_budget_termination(110.6, 110.0, 0.005));
        assert!(check_budget_termination(110.0 * 1.005, 110.0, 0.005));
    }
}

mod common;

use cga_core::model::evaluate_total_cost;
use cga_core::monolith::{build_least_cost, build_mga_monolith, operational_decisions, solve_monolith};
use cga_core::{MgaWeightVector, RunStatus};
use cga_lp::BackendKind;
use common::*;

const BACKENDS: [BackendKind; 2] = [BackendKind::Highs, BackendKind::Reference];

#[test]
fn toy_least_cost() {
    let inst = toy_default();
    for kind in BACKENDS {
        let rec = solve_monolith(&build_least_cost(&inst).unwrap(), &inst, kind.create().as_mut()).unwrap();
        assert_eq!(rec.status, RunStatus::Converged);
        assert!((rec.planning[0] - 1.0).abs() < 1e-7, "{kind:?}: {:?}", rec.planning);
        assert!((rec.total_cost - 3.0).abs() < 1e-7);
        assert!(rec.is_consistent(&inst));
    }
}

#[test]
fn zero_demand_costs_nothing() {
    let inst = toy(0.0, 2.0, 1.0, 2.0, 3);
    let rec = solve_monolith(
        &build_least_cost(&inst).unwrap(),
        &inst,
        BackendKind::Highs.create().as_mut(),
    )
    .unwrap();
    assert!(rec.planning[0].abs() < 1e-9);
    assert!(rec.total_cost.abs() < 1e-9);
}

#[test]
fn generator_free_pays_penalty() {
    let inst = generator_free(1.0);
    let rec = solve_monolith(
        &build_least_cost(&inst).unwrap(),
        &inst,
        BackendKind::Highs.create().as_mut(),
    )
    .unwrap();
    assert!((rec.total_cost - 1e4).abs() < 1e-6, "{}", rec.total_cost);
}

#[test]
fn period_costs_match_decisions() {
    let inst = family(3, 3, 6, 4);
    let build = build_least_cost(&inst).unwrap();
    let res = BackendKind::Highs.create().solve_lp(&build.lp, false).unwrap();
    let ops = operational_decisions(&build, &res.primal);
    let total = evaluate_total_cost(&inst, &res.primal[build.columns.planning.clone()], &ops).unwrap();
    assert!((total - res.objective).abs() < 1e-7 * total.max(1.0));
}

#[test]
fn mga_toy_directions() {
    let inst = toy_default();
    for kind in BACKENDS {
        let mut b = kind.create();
        let min = build_mga_monolith(&inst, &MgaWeightVector::explicit(vec![1.0]), 3.3).unwrap();
        let rec = solve_monolith(&min, &inst, b.as_mut()).unwrap();
        // Shortfall at penalty M per unit lets capacity dip just below demand:
        // x + 2x + M(1 - x) = 3.3, with M = 1e4·max(2, 1).
        let m = inst.periods[0].slack_penalty;
        assert_eq!(m, 2e4);
        let expected = (m - 3.3) / (m - 3.0);
        assert!(
            (rec.mga_objective.unwrap() - expected).abs() < 1e-7,
            "{kind:?}: {:?}",
            rec.mga_objective
        );

        let zero = build_mga_monolith(&inst, &MgaWeightVector::explicit(vec![0.0]), 3.3).unwrap();
        let rec = solve_monolith(&zero, &inst, b.as_mut()).unwrap();
        assert_eq!(rec.status, RunStatus::Converged);
        assert!(rec.mga_objective.unwrap().abs() < 1e-12);

        // Capacity grows until c·x + 2 hits the budget.
        let max = build_mga_monolith(&inst, &MgaWeightVector::explicit(vec![-1.0]), 3.3).unwrap();
        let rec = solve_monolith(&max, &inst, b.as_mut()).unwrap();
        assert!((rec.planning[0] - 1.3).abs() < 1e-7, "{kind:?}: {:?}", rec.planning);
        assert!((rec.total_cost - 3.3).abs() < 1e-7);
        assert!(max.budget_row.is_some() && build_least_cost(&inst).unwrap().budget_row.is_none());
    }
}

#[test]
fn budget_below_optimum_is_infeasible() {
    let inst = toy_default();
    let build = build_mga_monolith(&inst, &MgaWeightVector::explicit(vec![1.0]), 2.9).unwrap();
    let rec = solve_monolith(&build, &inst, BackendKind::Highs.create().as_mut()).unwrap();
    assert_eq!(rec.status, RunStatus::Infeasible);
}

#[test]
fn weight_dimension_is_checked() {
    let inst = toy_default();
    assert!(build_mga_monolith(&inst, &MgaWeightVector::explicit(vec![1.0, 2.0]), 3.3).is_err());
}

#[test]
fn milp_toy_is_integral() {
    let inst = toy_spec(1.3, 2.0, 1.0, 3.0, 2, Some(1.0));
    let lp_inst = toy(1.3, 2.0, 1.0, 3.0, 2);
    for kind in BACKENDS {
        let rec = solve_monolith(&build_least_cost(&inst).unwrap(), &inst, kind.create().as_mut()).unwrap();
        assert_eq!(rec.planning, vec![2.0]);
        let relaxed = solve_monolith(&build_least_cost(&lp_inst).unwrap(), &lp_inst, kind.create().as_mut()).unwrap();
        assert!(rec.total_cost >= relaxed.total_cost - 1e-9);
    }
}

#[test]
fn budget_row_is_respected_and_monotone_in_beta() {
    let inst = family(2, 3, 6, 11);
    let mut b = BackendKind::Highs.create();
    let lc = solve_monolith(&build_least_cost(&inst).unwrap(), &inst, b.as_mut()).unwrap();
    assert!(lc.total_cost.is_finite() && lc.total_cost >= 0.0);
    for seed in 0..6 {
        let w = cga_core::weights::random_vector(inst.planning_dim(), seed).unwrap();
        let mut prev = f64::INFINITY;
        for beta in [0.0, 0.1, 0.2] {
            let eps = (1.0 + beta) * lc.total_cost;
            let rec = solve_monolith(&build_mga_monolith(&inst, &w, eps).unwrap(), &inst, b.as_mut()).unwrap();
            assert_eq!(rec.status, RunStatus::Converged);
            assert!(rec.total_cost <= eps + 1e-7 * eps);
            let obj = rec.mga_objective.unwrap();
            assert!(obj <= prev + 1e-7, "beta {beta}: {obj} > {prev}");
            prev = obj;
        }
    }
}

#[test]
fn beta_zero_pins_cost() {
    let inst = family(2, 2, 8, 3);
    let mut b = BackendKind::Highs.create();
    let lc = solve_monolith(&build_least_cost(&inst).unwrap(), &inst, b.as_mut()).unwrap();
    let w = cga_core::weights::random_vector(inst.planning_dim(), 5).unwrap();
    let rec = solve_monolith(
        &build_mga_monolith(&inst, &w, lc.total_cost).unwrap(),
        &inst,
        b.as_mut(),
    )
    .unwrap();
    assert_eq!(rec.status, RunStatus::Converged);
    assert!((rec.total_cost - lc.total_cost).abs() < 1e-6 * lc.total_cost.max(1.0));
}

mod common;

use cga_core::cga::{check_budget_termination, compute_budget};
use cga_core::driver::{emit_reports, generate_weights, monolithic_mga_records, run, solutions_document, trace_table};
use cga_core::{AlgoConfig, CutStrategy, Executor, MgaWeightVector, RunMode, RunStatus};
use cga_lp::BackendKind;
use common::*;

fn seq() -> Executor {
    Executor::sequential(BackendKind::Highs)
}

fn config(vectors: usize, strategy: CutStrategy) -> AlgoConfig {
    AlgoConfig {
        vectors_total: vectors,
        cut_strategy: strategy,
        ..AlgoConfig::default()
    }
}

#[test]
fn toy_alternatives_all_converge_within_budget() {
    let inst = toy_default();
    let cfg = config(4, CutStrategy::LeastCostOnly);
    let report = run(&inst, &cfg, &seq()).unwrap();
    assert_eq!(report.mga.len(), 4);
    assert!(report.failures().is_empty(), "{:?}", report.failures());
    for r in &report.mga {
        let rec = r.record.as_ref().unwrap();
        assert!(check_budget_termination(
            rec.total_cost,
            report.budget.epsilon,
            cfg.delta_mga
        ));
    }
    assert_eq!(report.stats.converged, 4);
}

#[test]
fn no_vectors_means_least_cost_only() {
    let inst = family(2, 2, 4, 1);
    let report = run(&inst, &config(0, CutStrategy::LeastCostOnly), &seq()).unwrap();
    assert!(report.mga.is_empty());
    assert_eq!(report.least_cost.status, RunStatus::Converged);
    assert_eq!(report.stats.median_iterations, None);
}

#[test]
fn shared_cuts_save_iterations_without_changing_answers() {
    let inst = family(3, 4, 8, 6);
    let none = run(&inst, &config(8, CutStrategy::None), &seq()).unwrap();
    let shared = run(&inst, &config(8, CutStrategy::LeastCostOnly), &seq()).unwrap();
    let total = |r: &cga_core::driver::RunReport| -> usize {
        r.mga.iter().map(|m| m.record.as_ref().unwrap().iterations()).sum()
    };
    assert!(total(&none) >= total(&shared), "{} < {}", total(&none), total(&shared));
    let eps = shared.budget.epsilon;
    let weights: Vec<MgaWeightVector> = shared.mga.iter().map(|m| m.weights.clone()).collect();
    let tight = monolithic_mga_records(&inst, &weights, eps, &seq()).unwrap();
    let relaxed = monolithic_mga_records(&inst, &weights, eps * 1.005, &seq()).unwrap();
    for report in [&none, &shared] {
        for (i, m) in report.mga.iter().enumerate() {
            let obj = m.record.as_ref().unwrap().mga_objective.unwrap();
            let (lo, hi) = (relaxed[i].mga_objective.unwrap(), tight[i].mga_objective.unwrap());
            assert!(lo - 1e-6 <= obj && obj <= hi + 1e-6, "iterate {i}: {lo} {obj} {hi}");
        }
    }
}

#[test]
fn monolithic_zero_beta_pins_cost() {
    let inst = family(2, 3, 6, 2);
    let cfg = AlgoConfig {
        beta: 0.0,
        mode: RunMode::Monolithic,
        vectors_total: 4,
        ..AlgoConfig::default()
    };
    let report = run(&inst, &cfg, &seq()).unwrap();
    assert_eq!(report.mode, RunMode::Monolithic);
    let lc = report.least_cost.total_cost;
    for m in &report.mga {
        let rec = m.record.as_ref().unwrap();
        assert_eq!(rec.status, RunStatus::Converged);
        assert!((rec.total_cost - lc).abs() <= 1e-6 * lc.max(1.0));
    }
}

#[test]
fn infeasible_budget_is_reported_per_vector() {
    let inst = toy_default();
    let w = vec![
        MgaWeightVector::explicit(vec![1.0]),
        MgaWeightVector::explicit(vec![-1.0]),
    ];
    let recs = monolithic_mga_records(&inst, &w, 2.0, &seq()).unwrap();
    assert!(recs.iter().all(|r| r.status == RunStatus::Infeasible));
}

#[test]
fn reports_are_written_and_stable() {
    let inst = family(2, 2, 6, 3);
    let report = run(&inst, &config(4, CutStrategy::LeastCostOnly), &seq()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_reports(&report, dir.path()).unwrap();
    for f in ["solutions.json", "trace.csv", "config.json", "summary.json"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let rows = trace_table(&report).unwrap().lines().count() - 1;
    let iters: usize = report.least_cost.iterations()
        + report
            .mga
            .iter()
            .map(|m| m.record.as_ref().unwrap().iterations())
            .sum::<usize>();
    assert_eq!(rows, iters);

    let first = std::fs::read(dir.path().join("solutions.json")).unwrap();
    let again = run(&inst, &config(4, CutStrategy::LeastCostOnly), &seq()).unwrap();
    emit_reports(&again, dir.path()).unwrap();
    assert_eq!(first, std::fs::read(dir.path().join("solutions.json")).unwrap());

    let doc: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(doc["mga"].as_array().unwrap().len(), 4);
    assert!(doc["mga"]
        .as_array()
        .unwrap()
        .iter()
        .all(|m| m["budget_satisfied"] == true));
}

#[test]
fn both_mode_comparisons_pass() {
    let inst = family(3, 3, 6, 9);
    let cfg = AlgoConfig {
        mode: RunMode::Both,
        vectors_total: 6,
        ..AlgoConfig::default()
    };
    let report = run(&inst, &cfg, &seq()).unwrap();
    assert_eq!(report.comparisons.len(), 6);
    assert!(report.comparisons.iter().all(|c| c.passed), "{:?}", report.comparisons);
}

#[test]
fn concurrent_partitions_match_sequential() {
    let inst = family(3, 3, 6, 4);
    let base = AlgoConfig {
        vectors_total: 8,
        partition_k: 3,
        ..AlgoConfig::default()
    };
    let a = run(&inst, &base, &seq()).unwrap();
    let concurrent = AlgoConfig {
        concurrent_partitions: true,
        ..base
    };
    let b = run(&inst, &concurrent, &Executor::new(BackendKind::Highs, 3).unwrap()).unwrap();
    let strip = |s: String| s.replace("\"concurrent_partitions\": true", "\"concurrent_partitions\": false");
    assert_eq!(solutions_document(&a), strip(solutions_document(&b)));
    assert!(a.mga.iter().all(|m| m.partition.is_some()));
}

#[test]
fn worker_count_does_not_change_results() {
    let inst = family(3, 5, 6, 12);
    let cfg = config(6, CutStrategy::LeastCostOnly);
    let a = run(&inst, &cfg, &seq()).unwrap();
    let b = run(&inst, &cfg, &Executor::new(BackendKind::Highs, 4).unwrap()).unwrap();
    assert_eq!(solutions_document(&a), solutions_document(&b));
}

#[test]
fn weights_are_deterministic_and_sized() {
    let inst = family(3, 2, 4, 0);
    let cfg = config(10, CutStrategy::LeastCostOnly);
    let a = generate_weights(&inst, &cfg).unwrap();
    assert_eq!(a, generate_weights(&inst, &cfg).unwrap());
    assert_eq!(a.len(), 10);
    assert!(a.iter().all(|w| w.dim() == inst.planning_dim()));
    let other = generate_weights(&inst, &AlgoConfig { seed: 1, ..cfg }).unwrap();
    assert_ne!(a, other);
}

#[test]
fn invalid_config_is_rejected() {
    let inst = toy_default();
    let cfg = AlgoConfig {
        beta: -0.1,
        ..AlgoConfig::default()
    };
    assert!(run(&inst, &cfg, &seq()).is_err());
    assert!(compute_budget(-1.0, 0.1).is_err());
}

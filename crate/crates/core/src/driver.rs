//! End-to-end runs: least-cost solve, budget, weight generation, optional
//! partitioning, one CGA solve per weight vector, and report files.
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::benders::benders_least_cost;
use crate::cga::{cga_solve_one, check_budget_termination, compute_budget, Budget};
use crate::config::{AlgoConfig, RunMode};
use crate::cutpool::{CutPool, PoolPhase};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::instances::instance_hash;
use crate::model::{Instance, RunStatus, SolutionRecord};
use crate::monolith::{build_least_cost, build_mga_monolith, solve_monolith};
use crate::partition::{partition_weights, schedule};
use crate::seeds::derive_seed;
use crate::weights::{combination_set, MgaWeightVector};

pub const SOLUTIONS_SCHEMA_VERSION: u64 = 1;

/// Absolute slack of the sandwich comparison.
pub const SANDWICH_TOL: f64 = 1e-6;

/// One MGA solve. `record` is absent when the solve failed with an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgaRun {
    pub index: usize,
    pub partition: Option<usize>,
    pub weights: MgaWeightVector,
    pub record: Option<SolutionRecord>,
    pub error: Option<String>,
    pub solve_secs: f64,
}

/// Monolithic bracket of one CGA objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub index: usize,
    pub cga_objective: Option<f64>,
    /// Monolithic optimum with the relaxed budget `ε(1 + δ_MGA)`.
    pub monolith_relaxed: Option<f64>,
    /// Monolithic optimum with budget `ε`.
    pub monolith_tight: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunStats {
    pub median_iterations: Option<f64>,
    pub median_solve_secs: Option<f64>,
    /// Final pool size of every work list.
    pub pool_sizes: Vec<usize>,
    pub converged: usize,
    pub iteration_limit: usize,
    pub infeasible: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance_name: String,
    pub instance_hash: String,
    pub mode: RunMode,
    pub config: AlgoConfig,
    pub least_cost: SolutionRecord,
    pub budget: Budget,
    pub mga: Vec<MgaRun>,
    pub comparisons: Vec<Comparison>,
    pub stats: RunStats,
}

impl RunReport {
    /// Descriptions of everything that did not end cleanly.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.least_cost.status != RunStatus::Converged {
            out.push(format!(
                "least-cost solve ended with status {:?}",
                self.least_cost.status
            ));
        }
        for run in &self.mga {
            match (&run.record, &run.error) {
                (_, Some(e)) => out.push(format!("MGA iterate {} failed: {e}", run.index)),
                (Some(r), None) if r.status != RunStatus::Converged => {
                    out.push(format!("MGA iterate {} ended with status {:?}", run.index, r.status))
                }
                _ => {}
            }
        }
        for c in self.comparisons.iter().filter(|c| !c.passed) {
            out.push(format!("MGA iterate {} is outside its monolithic bracket", c.index));
        }
        out
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

fn summarize(runs: &[MgaRun], pool_sizes: Vec<usize>) -> RunStats {
    let mut stats = RunStats {
        pool_sizes,
        ..RunStats::default()
    };
    for run in runs {
        match &run.record {
            None => stats.failed += 1,
            Some(r) => match r.status {
                RunStatus::Converged => stats.converged += 1,
                RunStatus::IterationLimit => stats.iteration_limit += 1,
                RunStatus::Infeasible => stats.infeasible += 1,
            },
        }
    }
    let records = runs.iter().filter_map(|r| r.record.as_ref());
    stats.median_iterations = median(records.map(|r| r.iterations() as f64).collect());
    stats.median_solve_secs = median(runs.iter().map(|r| r.solve_secs).collect());
    stats
}

/// The run's weight vectors, generated up front from the root seed.
pub fn generate_weights(instance: &Instance, config: &AlgoConfig) -> Result<Vec<MgaWeightVector>> {
    let n = instance.planning_dim();
    let mut groups: Vec<Vec<usize>> = instance.planning.groups.iter().map(|g| g.members.clone()).collect();
    if groups.is_empty() {
        groups = (0..n).map(|j| vec![j]).collect();
    }
    combination_set(
        n,
        &groups,
        config.vectors_total,
        config.minmax_fraction,
        derive_seed(config.seed, "weights"),
    )
}

/// Ordered `(vector index, vector)` work lists with their partition index.
fn work_lists(
    weights: &[MgaWeightVector],
    config: &AlgoConfig,
) -> Result<Vec<(Option<usize>, Vec<(usize, MgaWeightVector)>)>> {
    if weights.is_empty() {
        return Ok(Vec::new());
    }
    if config.partition_k == 0 {
        return Ok(vec![(None, weights.iter().cloned().enumerate().collect())]);
    }
    let k = config.partition_k.min(weights.len());
    let part = partition_weights(
        weights,
        k,
        derive_seed(config.seed, "clustering"),
        config.kmeans_max_iters,
    )?;
    Ok(schedule(&part, config.per_partition.unwrap_or(usize::MAX))
        .into_iter()
        .enumerate()
        .map(|(c, list)| (Some(c), list))
        .collect())
}

fn run_list(
    instance: &Instance,
    config: &AlgoConfig,
    budget: &Budget,
    seed_pool: &CutPool,
    partition: Option<usize>,
    list: Vec<(usize, MgaWeightVector)>,
    exec: &Executor,
) -> (Vec<MgaRun>, usize) {
    let mut pool = seed_pool.least_cost_seed();
    let mut runs = Vec::with_capacity(list.len());
    for (index, w) in list {
        let t = Instant::now();
        let result = cga_solve_one(
            instance,
            &w,
            budget,
            pool.view_for(PoolPhase::Mga(index)),
            index,
            config,
            exec,
        )
        .and_then(|out| {
            pool.absorb(out.new_cuts)?;
            Ok(out.record)
        });
        let solve_secs = t.elapsed().as_secs_f64();
        let (record, error) = match result {
            Ok(r) => (Some(r), None),
            Err(e) => {
                log::error!("MGA iterate {index} failed: {e}");
                (None, Some(e.to_string()))
            }
        };
        runs.push(MgaRun {
            index,
            partition,
            weights: w,
            record,
            error,
            solve_secs,
        });
    }
    (runs, pool.len())
}

/// Decomposed run: Benders least cost, then one CGA solve per weight vector.
pub fn run_cga(instance: &Instance, config: &AlgoConfig, exec: &Executor) -> Result<RunReport> {
    config.validate()?;
    instance.ensure_valid()?;
    let mut pool = CutPool::new(instance.planning_dim(), config.cut_strategy);
    let least_cost = benders_least_cost(instance, config, &mut pool, exec)?;
    if least_cost.status == RunStatus::Infeasible {
        return Err(Error::Solver {
            context: "least-cost problem".into(),
            status: cga_lp::SolveStatus::Infeasible,
        });
    }
    let budget = compute_budget(least_cost.total_cost, config.beta)?;
    let weights = generate_weights(instance, config)?;
    let lists = work_lists(&weights, config)?;

    let results: Vec<(Vec<MgaRun>, usize)> = if config.concurrent_partitions && lists.len() > 1 {
        std::thread::scope(|s| {
            let handles: Vec<_> = lists
                .into_iter()
                .map(|(part, list)| {
                    let (pool, budget) = (&pool, &budget);
                    s.spawn(move || run_list(instance, config, budget, pool, part, list, exec))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("CGA worker thread panicked"))
                .collect()
        })
    } else {
        lists
            .into_iter()
            .map(|(part, list)| run_list(instance, config, &budget, &pool, part, list, exec))
            .collect()
    };

    let pool_sizes = results.iter().map(|(_, n)| *n).collect();
    let mut mga: Vec<MgaRun> = results.into_iter().flat_map(|(runs, _)| runs).collect();
    mga.sort_by_key(|r| r.index);
    let stats = summarize(&mga, pool_sizes);
    let mut report = RunReport {
        instance_name: instance.name.clone(),
        instance_hash: instance_hash(instance),
        mode: RunMode::Cga,
        config: config.clone(),
        least_cost,
        budget,
        mga,
        comparisons: Vec::new(),
        stats,
    };
    if config.mode == RunMode::Both {
        report.mode = RunMode::Both;
        report.comparisons = compare_with_monolith(instance, &report, exec)?;
    }
    Ok(report)
}

/// Monolithic MGA solves of `weights` under one explicit budget.
pub fn monolithic_mga_records(
    instance: &Instance,
    weights: &[MgaWeightVector],
    epsilon: f64,
    exec: &Executor,
) -> Result<Vec<SolutionRecord>> {
    exec.run_jobs(weights.iter().collect(), |w| {
        let build = build_mga_monolith(instance, w, epsilon)?;
        solve_monolith(&build, instance, exec.handle().as_mut())
    })
    .into_iter()
    .collect()
}

/// Monolithic run with the same report shape as [`run_cga`].
pub fn run_monolithic_mga(instance: &Instance, config: &AlgoConfig, exec: &Executor) -> Result<RunReport> {
    config.validate()?;
    instance.ensure_valid()?;
    let least_cost = solve_monolith(&build_least_cost(instance)?, instance, exec.handle().as_mut())?;
    if least_cost.status == RunStatus::Infeasible {
        return Err(Error::Solver {
            context: "monolithic least-cost problem".into(),
            status: cga_lp::SolveStatus::Infeasible,
        });
    }
    let budget = compute_budget(least_cost.total_cost, config.beta)?;
    let weights = generate_weights(instance, config)?;
    let t = Instant::now();
    let records = monolithic_mga_records(instance, &weights, budget.epsilon, exec)?;
    let per = t.elapsed().as_secs_f64() / weights.len().max(1) as f64;
    let mga: Vec<MgaRun> = weights
        .into_iter()
        .zip(records)
        .enumerate()
        .map(|(index, (w, r))| MgaRun {
            index,
            partition: None,
            weights: w,
            record: Some(r),
            error: None,
            solve_secs: per,
        })
        .collect();
    let stats = summarize(&mga, Vec::new());
    Ok(RunReport {
        instance_name: instance.name.clone(),
        instance_hash: instance_hash(instance),
        mode: RunMode::Monolithic,
        config: config.clone(),
        least_cost,
        budget,
        mga,
        comparisons: Vec::new(),
        stats,
    })
}

/// Relaxed budget used by the termination test: `ε(1 + δ)`.
pub fn relaxed_epsilon(epsilon: f64, delta_mga: f64) -> f64 {
    epsilon * (1.0 + delta_mga)
}

/// True when `monolith(relaxed) - tol <= objective <= monolith(tight) + tol`.
pub fn sandwich_holds(objective: f64, monolith_relaxed: f64, monolith_tight: f64) -> bool {
    monolith_relaxed - SANDWICH_TOL <= objective && objective <= monolith_tight + SANDWICH_TOL
}

/// Brackets every converged CGA objective between the monolithic optima at the
/// report's budget and at the relaxed budget.
pub fn compare_with_monolith(instance: &Instance, report: &RunReport, exec: &Executor) -> Result<Vec<Comparison>> {
    let eps = report.budget.epsilon;
    let relaxed = relaxed_epsilon(eps, report.config.delta_mga);
    let weights: Vec<MgaWeightVector> = report.mga.iter().map(|r| r.weights.clone()).collect();
    let tight = monolithic_mga_records(instance, &weights, eps, exec)?;
    let loose = monolithic_mga_records(instance, &weights, relaxed, exec)?;
    Ok(report
        .mga
        .iter()
        .zip(tight.iter().zip(&loose))
        .map(|(run, (t, l))| {
            let obj = |r: &SolutionRecord| (r.status == RunStatus::Converged).then_some(r.mga_objective).flatten();
            let cga = run.record.as_ref().and_then(obj);
            let (mt, ml) = (obj(t), obj(l));
            let passed = match (cga, ml, mt) {
                (Some(c), Some(lo), Some(hi)) => sandwich_holds(c, lo, hi),
                // Infeasible at the tight budget: only the relaxed bound applies.
                (Some(c), Some(lo), None) => c >= lo - SANDWICH_TOL,
                (None, None, None) => run.record.as_ref().is_some_and(|r| r.status == RunStatus::Infeasible),
                _ => false,
            };
            Comparison {
                index: run.index,
                cga_objective: cga,
                monolith_relaxed: ml,
                monolith_tight: mt,
                passed,
            }
        })
        .collect())
}

/// Runs the path selected by `config.mode`.
pub fn run(instance: &Instance, config: &AlgoConfig, exec: &Executor) -> Result<RunReport> {
    match config.mode {
        RunMode::Monolithic => run_monolithic_mga(instance, config, exec),
        RunMode::Cga | RunMode::Both => run_cga(instance, config, exec),
    }
}

#[derive(Serialize)]
struct RecordEntry<'a> {
    planning: &'a [f64],
    period_costs: &'a [f64],
    total_cost: f64,
    mga_objective: Option<f64>,
    iterations: usize,
    status: RunStatus,
}

impl<'a> From<&'a SolutionRecord> for RecordEntry<'a> {
    fn from(r: &'a SolutionRecord) -> Self {
        Self {
            planning: &r.planning,
            period_costs: &r.period_costs,
            total_cost: r.total_cost,
            mga_objective: r.mga_objective,
            iterations: r.iterations(),
            status: r.status,
        }
    }
}

#[derive(Serialize)]
struct MgaEntry<'a> {
    index: usize,
    partition: Option<usize>,
    weights: &'a MgaWeightVector,
    budget_satisfied: Option<bool>,
    record: Option<RecordEntry<'a>>,
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct SolutionsDocument<'a> {
    schema_version: u64,
    instance_name: &'a str,
    instance_hash: &'a str,
    mode: RunMode,
    least_cost: RecordEntry<'a>,
    budget: &'a Budget,
    mga: Vec<MgaEntry<'a>>,
    comparisons: &'a [Comparison],
}

/// Solutions document: everything except timings, so equal runs give equal bytes.
pub fn solutions_document(report: &RunReport) -> String {
    let doc = SolutionsDocument {
        schema_version: SOLUTIONS_SCHEMA_VERSION,
        instance_name: &report.instance_name,
        instance_hash: &report.instance_hash,
        mode: report.mode,
        least_cost: (&report.least_cost).into(),
        budget: &report.budget,
        mga: report
            .mga
            .iter()
            .map(|run| MgaEntry {
                index: run.index,
                partition: run.partition,
                weights: &run.weights,
                budget_satisfied: run
                    .record
                    .as_ref()
                    .filter(|r| r.status == RunStatus::Converged)
                    .map(|r| check_budget_termination(r.total_cost, report.budget.epsilon, report.config.delta_mga)),
                record: run.record.as_ref().map(Into::into),
                error: run.error.as_deref(),
            })
            .collect(),
        comparisons: &report.comparisons,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serialises");
    s.push('\n');
    s
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Convergence trace: one row per iteration of every solve.
pub fn trace_table(report: &RunReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "iterate",
        "iteration",
        "phase",
        "true_cost",
        "budget_ratio",
        "lower_bound",
        "upper_bound",
        "master_objective",
        "master_secs",
        "subproblem_secs",
    ])?;
    let solves = std::iter::once(("least-cost".to_string(), Some(&report.least_cost)))
        .chain(report.mga.iter().map(|r| (r.index.to_string(), r.record.as_ref())));
    for (id, record) in solves {
        for it in record.into_iter().flat_map(|r| &r.trace) {
            w.write_record([
                id.clone(),
                it.iteration.to_string(),
                format!("{:?}", it.phase).to_lowercase(),
                it.true_cost.to_string(),
                opt(it.budget_ratio),
                opt(it.lower_bound),
                opt(it.upper_bound),
                opt(it.master_objective),
                it.master_secs.to_string(),
                it.subproblem_secs.to_string(),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `solutions.json`, `trace.csv`, `config.json` and `summary.json` into `out_dir`.
pub fn emit_reports(report: &RunReport, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let write = |name: &str, text: String| {
        let path = out_dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(path, e))
    };
    write("solutions.json", solutions_document(report))?;
    write("trace.csv", trace_table(report)?)?;
    let mut config = serde_json::to_string_pretty(&report.config).expect("config serialises");
    config.push('\n');
    write("config.json", config)?;
    let summary = serde_json::json!({
        "stats": report.stats,
        "failures": report.failures(),
    });
    write(
        "summary.json",
        serde_json::to_string_pretty(&summary).expect("summary serialises") + "\n",
    )
}

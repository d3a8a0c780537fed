//! Cutting-plane generation of near-optimal alternatives for two-block planning
//! problems: Benders least-cost solving, budget-constrained MGA with shared cuts,
//! weight partitioning, and a monolithic reference path.
pub mod benders;
pub mod cga;
pub mod config;
pub mod cutpool;
pub mod driver;
pub mod error;
pub mod exec;
pub mod instances;
pub mod model;
pub mod monolith;
pub mod partition;
pub mod seeds;
pub mod subproblem;
pub mod weights;

pub use benders::{benders_least_cost, Evaluation, PeriodEvaluator};
pub use cga::{cga_solve_one, compute_budget, Budget};
pub use config::{AlgoConfig, RunMode};
pub use cutpool::{Cut, CutPool, CutStrategy, PoolPhase, Provenance};
pub use error::{Error, Result};
pub use exec::Executor;
pub use instances::{generate_instance, read_instance, write_instance, InstanceSpec};
pub use model::{Instance, RunStatus, SolutionRecord};
pub use weights::MgaWeightVector;

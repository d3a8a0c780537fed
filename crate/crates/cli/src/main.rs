use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cga_core::config::{AlgoConfig, RunMode};
use cga_core::driver::{emit_reports, run};
use cga_core::instances::{instance_hash, write_instance};
use cga_core::model::validate_instance;
use cga_core::{generate_instance, read_instance, CutStrategy, Executor, InstanceSpec};
use cga_lp::BackendKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "cga",
    version,
    about = "Near-optimal alternatives for two-block planning models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve least cost, then explore alternatives within the cost budget.
    Run(RunArgs),
    /// Write a synthetic instance.
    Generate(GenerateArgs),
    /// Check an instance file and print its summary.
    Validate { path: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Cga,
    Monolithic,
    Both,
}

#[derive(Args)]
struct SpecArgs {
    /// Generator spec file (JSON); the flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    zones: Option<usize>,
    #[arg(long)]
    periods: Option<usize>,
    #[arg(long)]
    hours: Option<usize>,
    #[arg(long)]
    instance_seed: Option<u64>,
    #[arg(long)]
    integer: bool,
    #[arg(long)]
    storage: bool,
    #[arg(long)]
    emission_cap: Option<f64>,
}

impl SpecArgs {
    fn resolve(&self) -> Result<InstanceSpec> {
        let mut spec = match &self.spec {
            Some(p) => serde_json::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
            None => InstanceSpec::default(),
        };
        if let Some(v) = self.zones {
            spec.zones = v;
        }
        if let Some(v) = self.periods {
            spec.periods = v;
        }
        if let Some(v) = self.hours {
            spec.hours_per_period = v;
        }
        if let Some(v) = self.instance_seed {
            spec.seed = v;
        }
        spec.integer_mode |= self.integer;
        spec.storage |= self.storage;
        if self.emission_cap.is_some() {
            spec.emission_cap = self.emission_cap;
        }
        Ok(spec)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Instance file; without it an instance is generated from the spec flags.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(short, long, default_value = "cga-out")]
    out: PathBuf,
    /// Config file (JSON); the flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    delta_ls: Option<f64>,
    #[arg(long)]
    delta_mga: Option<f64>,
    #[arg(long)]
    k_ls: Option<usize>,
    #[arg(long)]
    k_mga: Option<usize>,
    /// none | least-cost-only | all | first-n | first-n:<count>
    #[arg(long)]
    cut_strategy: Option<String>,
    #[arg(long)]
    partition_k: Option<usize>,
    #[arg(long)]
    per_partition: Option<usize>,
    #[arg(long)]
    vectors: Option<usize>,
    #[arg(long)]
    minmax_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    concurrent_partitions: bool,
    /// highs | reference; defaults to CGA_LP_BACKEND or highs.
    #[arg(long)]
    backend: Option<String>,
}

impl RunArgs {
    fn config(&self) -> Result<AlgoConfig> {
        let mut c: AlgoConfig = match &self.config {
            Some(p) => serde_json::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
            None => AlgoConfig::default(),
        };
        macro_rules! set {
            ($($field:ident <- $arg:expr),* $(,)?) => {
                $(if let Some(v) = $arg { c.$field = v; })*
            };
        }
        set!(
            beta <- self.beta,
            delta_ls <- self.delta_ls,
            delta_mga <- self.delta_mga,
            k_ls <- self.k_ls,
            k_mga <- self.k_mga,
            partition_k <- self.partition_k,
            vectors_total <- self.vectors,
            minmax_fraction <- self.minmax_fraction,
            seed <- self.seed,
            worker_count <- self.workers,
        );
        if self.per_partition.is_some() {
            c.per_partition = self.per_partition;
        }
        if let Some(s) = &self.cut_strategy {
            c.cut_strategy = s.parse::<CutStrategy>()?;
        }
        if let Some(m) = self.mode {
            c.mode = match m {
                ModeArg::Cga => RunMode::Cga,
                ModeArg::Monolithic => RunMode::Monolithic,
                ModeArg::Both => RunMode::Both,
            };
        }
        c.concurrent_partitions |= self.concurrent_partitions;
        c.validate()?;
        Ok(c)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn cmd_run(args: &RunArgs) -> Result<Vec<String>> {
    let config = args.config()?;
    let instance = match &args.instance {
        Some(p) => read_instance(p).with_context(|| format!("loading {}", p.display()))?,
        None => generate_instance(&args.spec.resolve()?)?,
    };
    let backend = match &args.backend {
        Some(b) => b.parse::<BackendKind>()?,
        None => BackendKind::from_env()?,
    };
    let exec = Executor::new(backend, config.worker_count)?;
    log::info!(
        "instance {} with {} planning columns and {} periods",
        instance.name,
        instance.planning_dim(),
        instance.num_periods()
    );
    let report = run(&instance, &config, &exec)?;
    emit_reports(&report, &args.out).with_context(|| format!("writing reports to {}", args.out.display()))?;
    log::info!(
        "least cost {:.6}, budget {:.6}, {} of {} alternatives converged",
        report.least_cost.total_cost,
        report.budget.epsilon,
        report.stats.converged,
        report.mga.len()
    );
    Ok(report.failures())
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let instance = generate_instance(&args.spec.resolve()?)?;
    write_instance(&instance, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    println!("{} {}", instance_hash(&instance), args.out.display());
    Ok(())
}

fn cmd_validate(path: &Path) -> Result<()> {
    let instance = read_instance(path).with_context(|| format!("loading {}", path.display()))?;
    let violations = validate_instance(&instance);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("{}: {}", v.field, v.rule);
        }
        bail!("{} violation(s)", violations.len());
    }
    println!(
        "{}: {} planning columns, {} periods, integer: {}, hash {}",
        instance.name,
        instance.planning_dim(),
        instance.num_periods(),
        instance.has_integrality(),
        instance_hash(&instance)
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Generate(args) => cmd_generate(args).map(|_| Vec::new()),
        Command::Validate { path } => cmd_validate(path).map(|_| Vec::new()),
    };
    match outcome {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            println!("{}", serde_json::json!({ "status": "partial", "failures": failures }));
            ExitCode::from(1)
        }
        Err(e) => {
            println!(
                "{}",
                serde_json::json!({ "status": "error", "error": format!("{e:#}") })
            );
            ExitCode::from(2)
        }
    }
}

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use trajlab::io::fmt17;
use trajlab::runner::{
    run_geometry, run_gits, run_sample, write_artifacts, DatasetSource, GeometryConfig, GitsConfig, SampleConfig,
};
use trajlab::schedule::{ScheduleSpec, DEFAULT_EPS_S, DEFAULT_RHO, DEFAULT_T_MAX, DEFAULT_T_MIN};
use trajlab::{verify, Method, ScheduleKind, SolverSpec};

/// Probability-flow ODE sampling, trajectory geometry and time-schedule search
/// on exact kernel-density models.
///
/// Any subcommand accepts `--config FILE` with `key=value` lines naming its long
/// flags; flags given on the command line take precedence.
#[derive(Debug, Parser)]
#[command(name = "trajlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample trajectories with the optimal denoiser.
    Sample(SampleArgs),
    /// Search time schedules for one or more NFE budgets.
    Gits(GitsArgs),
    /// Geometry and PCA reports for saved trajectories.
    Geometry(GeometryArgs),
    /// Print a handcrafted time schedule.
    Schedule(ScheduleArgs),
    /// Run the acceptance checks and print one line per criterion.
    Verify,
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `gmm[:modes=2,d=2,n=32,spread=0.1]`, `plane[:m=2,d=512,n=64]`, `cube[:d=1024,n=64]` or a CSV file.
    #[arg(long, default_value = "gmm")]
    dataset: DatasetSource,
    /// Worker threads; 1 gives bit-identical outputs across runs.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long = "schedule-kind", default_value = "polynomial")]
    kind: ScheduleKind,
    /// Number of steps.
    #[arg(long, default_value_t = 10)]
    nfe: usize,
    #[arg(long, default_value_t = DEFAULT_T_MIN)]
    t_min: f64,
    #[arg(long, default_value_t = DEFAULT_T_MAX)]
    t_max: f64,
    #[arg(long, default_value_t = DEFAULT_RHO)]
    rho: f64,
    #[arg(long, default_value_t = DEFAULT_EPS_S)]
    eps_s: f64,
}

impl GridArgs {
    fn spec(&self) -> ScheduleSpec {
        ScheduleSpec {
            kind: self.kind,
            n_steps: self.nfe,
            t_min: self.t_min,
            t_max: self.t_max,
            rho: self.rho,
            eps_s: self.eps_s,
        }
    }
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value = "euler")]
    solver: Method,
    /// Multistep order for ipndm.
    #[arg(long, default_value_t = SolverSpec::DEFAULT_IPNDM_ORDER)]
    order: usize,
    /// Replace the first step by the analytic Gaussian step.
    #[arg(long)]
    afs: bool,
    #[arg(long, default_value_t = 4)]
    batch: usize,
}

#[derive(Debug, Args)]
struct GitsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = trajlab::gits::DEFAULT_TEACHER_NFE)]
    teacher_nfe: usize,
    /// NFE budgets, comma separated or repeated; one search serves all of them.
    #[arg(long, value_delimiter = ',', required = true)]
    budget: Vec<usize>,
    #[arg(long, default_value_t = trajlab::gits::DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long, default_value_t = trajlab::gits::DEFAULT_WARMUP)]
    warmup: usize,
    #[arg(long, default_value_t = DEFAULT_T_MIN)]
    t_min: f64,
    #[arg(long, default_value_t = DEFAULT_T_MAX)]
    t_max: f64,
    /// Also write `cost_matrix.csv`.
    #[arg(long)]
    dump_costs: bool,
}

#[derive(Debug, Args)]
struct GeometryArgs {
    #[command(flatten)]
    common: Common,
    /// Trajectory CSV files as written by `sample`.
    #[arg(required = true)]
    trajectories: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 1.0, 10.0])]
    bandwidth: Vec<f64>,
    #[arg(long, default_value_t = 4)]
    k_max: usize,
}

#[derive(Debug, Args)]
struct ScheduleArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Print the schedule as JSON instead of one time per line.
    #[arg(long)]
    json: bool,
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Sample(a) => {
            let solver = SolverSpec::new(a.solver).with_order(a.order).with_afs(a.afs);
            let cfg = SampleConfig {
                seed: a.common.seed,
                dataset: a.common.dataset,
                solver,
                schedule: a.grid.spec(),
                batch: a.batch,
                threads: a.common.threads,
            };
            report(&write_artifacts(&a.common.out, &run_sample(&cfg)?)?);
        }
        Command::Gits(a) => {
            let mut cfg = GitsConfig::new(a.common.dataset, a.budget);
            cfg.seed = a.common.seed;
            cfg.teacher_nfe = a.teacher_nfe;
            cfg.t_min = a.t_min;
            cfg.t_max = a.t_max;
            cfg.gamma = a.gamma;
            cfg.warmup = a.warmup;
            cfg.dump_costs = a.dump_costs;
            cfg.threads = a.common.threads;
            report(&write_artifacts(&a.common.out, &run_gits(&cfg)?)?);
        }
        Command::Geometry(a) => {
            let cfg = GeometryConfig {
                seed: a.common.seed,
                dataset: a.common.dataset,
                trajectories: a.trajectories,
                bandwidths: a.bandwidth,
                k_max: a.k_max,
            };
            report(&write_artifacts(&a.common.out, &run_geometry(&cfg)?)?);
        }
        Command::Schedule(a) => {
            let schedule = a.grid.spec().build()?;
            if a.json {
                println!("{}", schedule.to_json()?);
            } else {
                for t in schedule.times() {
                    println!("{}", fmt17(*t));
                }
            }
        }
        Command::Verify => {
            let mut failed = 0;
            for check in verify::ALL_CHECKS {
                let out = check();
                failed += usize::from(!out.passed);
                println!("{out}");
            }
            println!("{}/{} criteria passed", verify::ALL_CHECKS.len() - failed, verify::ALL_CHECKS.len());
            if failed > 0 {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args().collect()) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        // clap prints help and version to stdout with status 0, usage errors with status 2
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

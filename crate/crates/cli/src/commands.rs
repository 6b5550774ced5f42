//! Command-line surface and dispatch.

use crate::config::Config;
use crate::error::CliError;
use crate::instances::stream;
use crate::output::{create_run_dir, write_manifest, write_rows, Manifest};
use crate::{bench, fl, gap, sweep};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sigiscc::io::{read_scenario, write_kkt, write_scenario, write_solution, write_trace};
use sigiscc::{
    classify_feasibility, kkt_residuals, rayleigh_fading, sample_feasible_layout, solve_oracle, solve_with, Feasibility,
    OracleConfig, Policy, Scenario, Solution, SolverOptions,
};
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "sigiscc", version, about = "Power control for sensing-constrained over-the-air aggregation")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML configuration file; missing fields take preset values.
    #[arg(long, global = true, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Named parameter set used when no config file is given.
    #[arg(long, global = true, default_value = "standard")]
    pub preset: String,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Root directory; each invocation writes into a fresh subdirectory.
    #[arg(long, global = true, default_value = "runs")]
    pub out: PathBuf,
    /// Worker threads for scenario-level parallelism.
    #[arg(long, global = true, env = "SIGISCC_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverChoice {
    /// Active-set enumeration.
    Exact,
    Oracle,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance and write its solution and KKT residuals.
    Solve {
        #[arg(long, default_value = "optimal")]
        policy: Policy,
        #[arg(long, value_enum, default_value = "exact")]
        solver: SolverChoice,
        /// Also write the examined candidates.
        #[arg(long)]
        trace: bool,
        /// Instance CSV (with its `.scalars.csv` sidecar) instead of the config.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Optimality gaps of the oracle and baselines on random layouts.
    GapSuite,
    /// Mean MSE of every policy over the two-group grid.
    MseSweep,
    /// Runtime of the exact solver and the oracle against device count.
    Bench,
    /// Toy federated-learning trajectories.
    Fl {
        /// Restrict to these policies (repeatable).
        #[arg(long = "policy")]
        policies: Vec<String>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve { .. } => "solve",
            Command::GapSuite => "gap-suite",
            Command::MseSweep => "mse-sweep",
            Command::Bench => "bench",
            Command::Fl { .. } => "fl",
        }
    }
}

pub fn load_config(common: &Common) -> Result<Config, CliError> {
    match &common.config {
        Some(path) => Config::load(path),
        None => Config::preset(&common.preset),
    }
}

/// Runs a command and returns the directory it wrote.
pub fn run(cli: &Cli) -> Result<PathBuf, CliError> {
    let mut cfg = load_config(&cli.common)?;
    if let Command::Fl { policies } = &cli.command {
        if !policies.is_empty() {
            cfg.fl.policies = policies.clone();
            cfg.validate()?;
        }
    }
    let workers = match (&cli.command, cli.common.workers) {
        (Command::Bench, _) => 1,
        (_, Some(0)) => return Err(CliError::Usage("workers must be positive".into())),
        (_, Some(n)) => n,
        (_, None) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Internal(e.into()))?;
    let seed = cli.common.seed;
    let mut manifest = Manifest::new(cli.command.name(), seed, workers, &cfg);
    let dir = create_run_dir(&cli.common.out, cli.command.name(), seed)?;
    let result = pool.install(|| match &cli.command {
        Command::Solve {
            policy,
            solver,
            trace,
            scenario,
        } => cmd_solve(&cfg, seed, *policy, *solver, *trace, scenario.as_deref(), &dir, &mut manifest),
        Command::GapSuite => cmd_gap_suite(&cfg, seed, &dir, &mut manifest),
        Command::MseSweep => cmd_mse_sweep(&cfg, seed, &dir, &mut manifest),
        Command::Bench => cmd_bench(&cfg, seed, &dir, &mut manifest),
        Command::Fl { .. } => cmd_fl(&cfg, seed, &dir, &mut manifest),
    });
    if let Err(e) = &result {
        manifest.summary.insert("error".into(), e.to_string());
    }
    write_manifest(&dir, &manifest)?;
    result.map(|()| dir)
}

/// Instance for `solve`: a file, the inline config table, or a sampled
/// random-placement layout.
pub fn solve_instance(cfg: &Config, seed: u64, file: Option<&Path>) -> Result<(Scenario, usize), CliError> {
    if let Some(path) = file {
        if !path.exists() {
            return Err(CliError::Usage(format!("scenario file {} not found", path.display())));
        }
        return Ok((read_scenario(path).map_err(|e| CliError::Usage(e.to_string()))?, 0));
    }
    if let Some(s) = &cfg.solve.scenario {
        let sc = Scenario::new(s.h.clone(), s.b.clone(), s.noise_power, s.eta_d, s.p_max)
            .map_err(|e| CliError::Usage(format!("solve.scenario: {e}")))?;
        return Ok((sc, 0));
    }
    let mut rng = stream(seed, 0);
    let k = cfg.solve.n_eds;
    let (geom, rejections) =
        sample_feasible_layout(&mut rng, &cfg.radio, cfg.path_loss, &cfg.layout, k, cfg.solve.target_distance_m)?;
    Ok((cfg.radio.scenario(&geom, &rayleigh_fading(&mut rng, k))?, rejections))
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    cfg: &Config,
    seed: u64,
    policy: Policy,
    solver: SolverChoice,
    trace: bool,
    file: Option<&Path>,
    dir: &Path,
    manifest: &mut Manifest,
) -> Result<(), CliError> {
    let (s, rejections) = solve_instance(cfg, seed, file)?;
    manifest.rejections = rejections;
    write_scenario(&dir.join("scenario.csv"), &s)?;
    let class = classify_feasibility(&s);
    manifest.summary.insert("feasibility".into(), format!("{:?}", class.kind));
    if class.kind == Feasibility::Infeasible {
        return Err(CliError::Infeasible(format!(
            "P_max * sum(b) = {} < eta_D = {}",
            s.sensing_capacity(),
            s.eta_d
        )));
    }
    let opts = SolverOptions {
        trace,
        ..Default::default()
    };
    let use_oracle = policy == Policy::Oracle || (policy == Policy::Optimal && solver == SolverChoice::Oracle);
    let mut trace_rows = None;
    let sol: Solution = if use_oracle {
        solve_oracle(&s, &OracleConfig::default())?
    } else if policy == Policy::Optimal {
        let rep = solve_with(&s, &opts)?;
        manifest.summary.insert("certified".into(), rep.certified.to_string());
        trace_rows = trace.then_some(rep.trace);
        rep.solution
    } else {
        policy
            .apply(&s)?
            .ok_or_else(|| CliError::Infeasible(format!("policy `{policy}` misses the sensing threshold")))?
    };
    write_solution(&dir.join("solution.csv"), &sol, &s)?;
    match kkt_residuals(&sol, &s) {
        Ok(kkt) => write_kkt(&dir.join("kkt.csv"), &kkt)?,
        Err(e) => log::warn!("no KKT report: {e}"),
    }
    if let Some(rows) = trace_rows {
        write_trace(&dir.join("trace.csv"), &rows)?;
    }
    manifest.summary.insert("status".into(), sol.status.as_str().into());
    manifest.summary.insert("objective".into(), format!("{:e}", sol.objective));
    Ok(())
}

fn cmd_gap_suite(cfg: &Config, seed: u64, dir: &Path, manifest: &mut Manifest) -> Result<(), CliError> {
    let suite = gap::run_gap_suite(cfg, seed)?;
    manifest.rejections = suite.rejections;
    write_rows(&dir.join("gaps.csv"), &gap::gap_rows(&suite), &gap::GAP_HEADER)?;
    write_rows(&dir.join("gap_buckets.csv"), &gap::bucket_rows(&suite), &gap::BUCKET_HEADER)?;
    let n = suite.outcomes.len();
    let active = suite.outcomes.iter().filter(|o| o.sensing_active).count();
    let uncertified = suite.outcomes.iter().filter(|o| !o.certified).count();
    manifest.summary.insert("instances".into(), n.to_string());
    manifest.summary.insert("sensing_active".into(), active.to_string());
    manifest.summary.insert("uncertified".into(), uncertified.to_string());
    Ok(())
}

fn cmd_mse_sweep(cfg: &Config, seed: u64, dir: &Path, manifest: &mut Manifest) -> Result<(), CliError> {
    let draws = sweep::run_draws(cfg, seed)?;
    write_rows(&dir.join("sweep_draws.csv"), &sweep::draw_rows(&draws), &sweep::DRAW_HEADER)?;
    let points = sweep::summarize(cfg, &draws);
    write_rows(&dir.join("sweep.csv"), &points, &sweep::SUMMARY_HEADER)?;
    let skipped = draws.iter().filter(|d| d.mse.is_none()).count();
    manifest.summary.insert("infeasible_draws".into(), skipped.to_string());
    Ok(())
}

fn cmd_bench(cfg: &Config, seed: u64, dir: &Path, manifest: &mut Manifest) -> Result<(), CliError> {
    let res = bench::run_bench(cfg, seed)?;
    manifest.rejections = res.rejections;
    write_rows(&dir.join("runtimes.csv"), &res.timings, &bench::TIMING_HEADER)?;
    write_rows(&dir.join("runtime_medians.csv"), &res.medians, &bench::SUMMARY_HEADER)?;
    if let Some(slope) = res.slope {
        manifest.summary.insert("loglog_slope".into(), format!("{slope:.4}"));
        println!("log-log slope of median runtime vs K: {slope:.3}");
    }
    Ok(())
}

fn cmd_fl(cfg: &Config, seed: u64, dir: &Path, manifest: &mut Manifest) -> Result<(), CliError> {
    let runs = fl::run_fl_study(cfg, seed)?;
    let rounds: Vec<_> = runs.iter().flatten().collect();
    write_rows(&dir.join("fl_rounds.csv"), &rounds, &fl::ROUND_HEADER)?;
    let summary = fl::summarize(&runs);
    for p in &summary {
        manifest
            .summary
            .insert(format!("final_loss_{}", p.policy), format!("{:.6}", p.mean_final_loss));
    }
    write_rows(&dir.join("fl_summary.csv"), &summary, &fl::SUMMARY_HEADER)?;
    Ok(())
}

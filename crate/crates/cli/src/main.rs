//! `qnv`: command-line frontend for the quantum newsvendor solver.
//!
//! Four subcommands cover the workflow: `solve` searches the order grid,
//! `sweep` maps optimal decisions over a 2-D reliability grid, `estimate`
//! prices one explicit order vector, and `load-dist` trains a variational
//! demand loader for reuse. Every command reads one JSON scenario file
//! and is fully deterministic given the master seed.
//!
//! Exit codes: 0 on success, 1 for configuration or usage errors, 2 for
//! runtime failures.

mod config;
mod output;
mod svg;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use qnv_core::encoding::{circuit_distribution, variational_load, LoaderSpec};
use qnv_core::model::OrderDecision;
use qnv_core::optimizer::{decision_grid, evaluate_order, grid_optimize, reliability_sweep};

use config::{load_scenario, LoaderPlan, Scenario};
use output::{heatmap_csv, load_dist_csv, to_json, write_text, RunRecord};

/// Failures split by exit code: configuration problems exit 1, runtime
/// problems exit 2.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

fn runtime(e: qnv_core::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Parser)]
#[command(
    name = "qnv",
    version,
    about = "Amplitude-estimation solver for the newsvendor problem with unreliable suppliers",
    after_help = "Flags override the matching config keys. --estimator forces the estimator \
                  kind with default parameters; when the config already uses that kind, its \
                  parameters are kept."
)]
struct Cli {
    /// Scenario configuration file (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed; overrides the config's "seed".
    #[arg(long, global = true, value_name = "SEED")]
    seed: Option<u64>,

    /// Output directory; overrides the config's "out_dir".
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Estimator kind; overrides the config's "estimator".
    #[arg(long, global = true, value_name = "KIND",
          value_parser = ["exact", "monte_carlo", "saa", "canonical_qae", "iqae"])]
    estimator: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search every feasible order vector for the best expected profit.
    Solve,
    /// Optimize each cell of a two-supplier reliability grid; writes
    /// heatmap.csv and heatmap.svg.
    Sweep,
    /// Estimate the expected profit of one explicit order vector.
    Estimate {
        /// Comma-separated order quantities, one per supplier (e.g. "3,0").
        #[arg(long, value_name = "Q1,Q2,...")]
        q: String,
    },
    /// Train the configured variational demand loader; writes loader.json
    /// and load_dist.csv.
    #[command(name = "load-dist")]
    LoadDist,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            // clap routes help to stdout and usage errors to stderr.
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            1
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let config_path = cli
        .config
        .ok_or_else(|| CliError::Config("--config <PATH> is required".into()))?;
    let scenario = load_scenario(
        &config_path,
        cli.seed,
        cli.out.as_deref(),
        cli.estimator.as_deref(),
    )?;
    match cli.command {
        Command::Solve => cmd_solve(&scenario),
        Command::Sweep => cmd_sweep(&scenario),
        Command::Estimate { q } => cmd_estimate(&scenario, &q),
        Command::LoadDist => cmd_load_dist(&scenario),
    }
}

fn cmd_solve(s: &Scenario) -> Result<(), CliError> {
    let loader = s.loader_for_estimator(s.seed)?;
    let grid = decision_grid(&s.suppliers, &s.demand).map_err(runtime)?;
    let (decision, result) = grid_optimize(
        &s.market,
        &s.suppliers,
        &s.demand,
        loader.as_ref(),
        &s.estimator,
        &grid,
        s.seed,
    )
    .map_err(runtime)?;
    let record = RunRecord::new(
        "solve",
        s.description.as_deref(),
        s.seed,
        &s.estimator,
        &decision,
        &result,
    );
    let path = write_text(&s.out_dir, "solve.json", &to_json(&record)?)?;
    println!(
        "solve: q = {:?}, objective = {:.6} over {} candidates -> {}",
        decision.q(),
        result.estimate,
        grid.len(),
        path.display()
    );
    Ok(())
}

fn cmd_sweep(s: &Scenario) -> Result<(), CliError> {
    let plan = s.sweep.as_ref().ok_or_else(|| {
        CliError::Config("sweep: the config has no \"sweep\" section".into())
    })?;
    if s.suppliers.len() != 2 {
        return Err(CliError::Config(format!(
            "sweep: exactly 2 suppliers are required, got {}",
            s.suppliers.len()
        )));
    }
    let loader = s.loader_for_estimator(s.seed)?;
    let grid = decision_grid(&s.suppliers, &s.demand).map_err(runtime)?;
    let map = reliability_sweep(
        &s.market,
        &s.suppliers,
        &s.demand,
        loader.as_ref(),
        &s.estimator,
        &plan.axis1,
        &plan.axis2,
        plan.mode,
        &grid,
        s.seed,
    )
    .map_err(runtime)?;
    let csv_path = write_text(&s.out_dir, "heatmap.csv", &heatmap_csv(&map))?;
    let svg_path = write_text(&s.out_dir, "heatmap.svg", &svg::heatmap_svg(&map))?;
    println!(
        "sweep: {}x{} cells -> {} and {}",
        plan.axis1.len(),
        plan.axis2.len(),
        csv_path.display(),
        svg_path.display()
    );
    Ok(())
}

fn cmd_estimate(s: &Scenario, q_text: &str) -> Result<(), CliError> {
    let q = parse_q(q_text)?;
    let decision = OrderDecision::new(q, &s.suppliers).map_err(runtime)?;
    let loader = s.loader_for_estimator(s.seed)?;
    let result = evaluate_order(
        &s.market,
        &s.suppliers,
        &decision,
        &s.demand,
        loader.as_ref(),
        &s.estimator,
        s.seed,
    )
    .map_err(runtime)?;
    let record = RunRecord::new(
        "estimate",
        s.description.as_deref(),
        s.seed,
        &s.estimator,
        &decision,
        &result,
    );
    let path = write_text(&s.out_dir, "estimate.json", &to_json(&record)?)?;
    println!(
        "estimate: q = {:?}, objective = {:.6} in [{:.6}, {:.6}] -> {}",
        decision.q(),
        result.estimate,
        result.ci_low,
        result.ci_high,
        path.display()
    );
    Ok(())
}

fn cmd_load_dist(s: &Scenario) -> Result<(), CliError> {
    let (depth, budget) = match s.loader {
        LoaderPlan::Variational { depth, budget } => (depth, budget),
        _ => {
            return Err(CliError::Config(
                "load-dist: the config must set loader kind \"variational\"".into(),
            ))
        }
    };
    let spec = variational_load(&s.demand, depth, budget, s.seed).map_err(runtime)?;
    let circuit = spec.circuit().map_err(runtime)?;
    let learned = circuit_distribution(&circuit).map_err(runtime)?;
    let divergence = match &spec {
        LoaderSpec::Variational {
            achieved_divergence,
            ..
        } => *achieved_divergence,
        LoaderSpec::Exact { .. } => unreachable!("variational training returns ansatz parameters"),
    };
    let json_path = write_text(&s.out_dir, "loader.json", &to_json(&spec)?)?;
    let csv_path = write_text(
        &s.out_dir,
        "load_dist.csv",
        &load_dist_csv(s.demand.probs(), &learned),
    )?;
    println!(
        "load-dist: divergence {divergence:.6} at depth {depth} -> {} and {}",
        json_path.display(),
        csv_path.display()
    );
    Ok(())
}

/// Parses "3,0,2" into order quantities. Usage problems are config errors.
fn parse_q(text: &str) -> Result<Vec<u32>, CliError> {
    text.split(',')
        .map(|part| {
            part.trim().parse::<u32>().map_err(|_| {
                CliError::Config(format!(
                    "--q: \"{part}\" is not a non-negative integer"
                ))
            })
        })
        .collect()
}

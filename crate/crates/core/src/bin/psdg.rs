//! Command-line harness: `psdg [options] <cond-table|iter-table|convergence|solve|export-matrices>`.
//!
//! Exit status is 0 on success, 1 on configuration errors and 2 when any
//! solve or estimate is flagged as not converged.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use psdg::bench::{self, ExperimentConfig, Overrides};
use psdg::krylov::{ConditionOptions, SolverKind};
use psdg::Error;

#[derive(Parser)]
#[command(name = "psdg", version, about = "Pseudo-stress DG Stokes solver benchmarks")]
struct Cli {
    /// Configuration file with [mesh], [discretisation], [experiment] and
    /// [convergence] sections.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: OverrideArgs,

    /// Format printed on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Markdown)]
    format: Format,

    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OverrideArgs {
    #[arg(long, global = true)]
    degree: Option<usize>,
    /// Comma-separated time steps.
    #[arg(long, global = true, value_delimiter = ',')]
    dt: Option<Vec<f64>>,
    /// Comma-separated solvers: cg, dcg, pcg-bj, pcg-cbj.
    #[arg(long, global = true, value_delimiter = ',')]
    solvers: Option<Vec<String>>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    maxit: Option<usize>,
    #[arg(long, global = true)]
    repetitions: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated agglomeration targets.
    #[arg(long, global = true, value_delimiter = ',')]
    targets: Option<Vec<usize>>,
    /// Output stem; `.csv` and `.md` are appended.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Markdown,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Condition numbers of A* with and without Block-Jacobi.
    CondTable {
        #[arg(long, default_value_t = ConditionOptions::default().tol)]
        lanczos_tol: f64,
        #[arg(long, default_value_t = ConditionOptions::default().max_steps)]
        max_steps: usize,
        /// Largest size solved with a dense eigensolver.
        #[arg(long, default_value_t = ConditionOptions::default().dense_threshold)]
        dense_threshold: usize,
    },
    /// Mean iteration counts over seeded random right-hand sides.
    IterTable,
    /// Energy-error convergence against a manufactured solution.
    Convergence,
    /// Time integration of the default manufactured problem.
    Solve {
        #[arg(long, default_value_t = 10)]
        steps: usize,
    },
    /// Matrix Market export of M1, B1, B2, B3, M, A and A*.
    ExportMatrices {
        #[arg(long, default_value = "matrices")]
        dir: PathBuf,
    },
}

fn config(cli: &Cli) -> psdg::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let o = &cli.overrides;
    let solvers = o
        .solvers
        .as_ref()
        .map(|v| v.iter().map(|s| s.parse::<SolverKind>()).collect::<psdg::Result<Vec<_>>>())
        .transpose()?;
    cfg.apply(&Overrides {
        degree: o.degree,
        dt_list: o.dt.clone(),
        solvers,
        tol: o.tol,
        maxit: o.maxit,
        repetitions: o.repetitions,
        seed: o.seed,
        targets: o.targets.clone(),
        output: o.output.clone(),
    })?;
    Ok(cfg)
}

fn emit(cfg: &ExperimentConfig, format: Format, csv: &str, markdown: &str) -> psdg::Result<()> {
    if let Some(stem) = &cfg.output {
        bench::write_outputs(stem, csv, markdown)?;
    }
    match format {
        Format::Markdown => print!("{markdown}"),
        Format::Csv => print!("{csv}"),
    }
    Ok(())
}

/// Returns whether anything was flagged.
fn run(cli: &Cli) -> psdg::Result<bool> {
    let cfg = config(cli)?;
    match &cli.command {
        Command::CondTable {
            lanczos_tol,
            max_steps,
            dense_threshold,
        } => {
            let opts = ConditionOptions {
                tol: *lanczos_tol,
                max_steps: *max_steps,
                dense_threshold: *dense_threshold,
            };
            let t = bench::run_condition_table(&cfg, &opts)?;
            emit(&cfg, cli.format, &t.to_csv(), &t.to_markdown())?;
            Ok(t.flagged_count() > 0)
        }
        Command::IterTable => {
            let t = bench::run_iteration_table(&cfg)?;
            emit(&cfg, cli.format, &t.to_csv(), &t.to_markdown())?;
            Ok(t.flagged_count() > 0)
        }
        Command::Convergence => {
            let t = bench::run_convergence(&cfg)?;
            emit(&cfg, cli.format, &t.to_csv(), &t.to_markdown())?;
            Ok(false)
        }
        Command::Solve { steps } => {
            let out = bench::run_solve(&cfg, *steps)?;
            let summary = format!(
                "solver={} elements={} dofs={} dt={:e} steps={} energy_error={:.6e}\n",
                out.solver, out.elements, out.dofs, out.time.dt, out.time.steps, out.energy_error
            );
            eprint!("{summary}");
            emit(&cfg, cli.format, &out.step_log, &out.step_log)?;
            Ok(false)
        }
        Command::ExportMatrices { dir } => {
            for p in bench::export_matrices(&cfg, dir)? {
                println!("{}", p.display());
            }
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("warning: some results are flagged as not converged");
            ExitCode::from(2)
        }
        Err(e @ Error::StepNotConverged { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

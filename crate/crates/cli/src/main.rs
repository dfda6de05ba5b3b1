use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use elm_cli::{cmd_compare, cmd_run, cmd_sweep, problem_listing, CliError, RunConfig};

/// Single-loop stochastic Lagrangian solvers: batch experiment runner.
#[derive(Debug, Parser)]
#[command(name = "elm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every repetition of a config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides `run.seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        quiet: bool,
    },
    /// Run several configs on the same problem and tabulate their trajectories.
    Compare {
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        quiet: bool,
    },
    /// Run a config once per value of a dotted parameter, e.g. `solver.rho`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        quiet: bool,
    },
    /// List the built-in problems.
    ListProblems,
}

fn load(path: &Path, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::from_path(path)?;
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    Ok(cfg)
}

fn label_for(path: &Path, cfg: &RunConfig) -> String {
    cfg.run.label.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "config".into())
    })
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            quiet,
        } => {
            cmd_run(&load(&config, seed)?, &out, quiet)?;
        }
        Command::Compare {
            configs,
            out,
            seed,
            quiet,
        } => {
            let loaded = configs
                .iter()
                .map(|p| load(p, seed).map(|c| (label_for(p, &c), c)))
                .collect::<Result<Vec<_>, _>>()?;
            cmd_compare(&loaded, &out, quiet)?;
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
            seed,
            quiet,
        } => {
            cmd_sweep(&load(&config, seed)?, &param, &values, &out, quiet)?;
        }
        Command::ListProblems => {
            for line in problem_listing() {
                println!("{line}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

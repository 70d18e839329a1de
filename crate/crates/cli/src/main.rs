use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use vft_cli::config::Method;
use vft_cli::{commands, RunConfig};

/// Usage errors exit with 1, runtime failures with 2.
const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser)]
#[command(name = "vft", version, about = "Simulated visual force/torque sensing pipeline")]
struct Cli {
    /// `key = value` config file applied over the defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and record the dataset.
    GenData {
        /// About a tenth of the default size.
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        out: Option<String>,
    },
    /// Fit the CNN or the effort MLP on the training environments.
    Train {
        #[arg(long)]
        data: Option<String>,
        #[arg(long)]
        checkpoint: Option<String>,
        /// cnn or effort_mlp
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        iterations: Option<u64>,
    },
    /// Score every method on the held-out environment.
    Eval {
        #[arg(long)]
        data: Option<String>,
        #[arg(long)]
        checkpoint: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run closed-loop trials of one task.
    RunTask {
        /// grasp, cover or clean
        task: String,
        #[arg(long)]
        trials: Option<usize>,
        /// cnn, gt or zero
        #[arg(long)]
        estimator: Option<String>,
        #[arg(long)]
        checkpoint: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Convert eval outputs to gnuplot data files.
    ExportPlots {
        #[arg(long)]
        input: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
}

fn set_opt(cfg: &mut RunConfig, key: &str, value: Option<impl ToString>) -> Result<()> {
    match value {
        Some(v) => cfg.set(key, &v.to_string()),
        None => Ok(()),
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    for pair in &cli.overrides {
        cfg.set_pair(pair)?;
    }
    set_opt(&mut cfg, "seed", cli.seed)?;
    set_opt(&mut cfg, "jobs", cli.jobs)?;
    match &cli.command {
        Command::GenData { quick, out } => {
            if *quick {
                cfg.set("data.quick", "true")?;
            }
            set_opt(&mut cfg, "data.dir", out.as_ref())?;
        }
        Command::Train {
            data,
            checkpoint,
            method,
            iterations,
        } => {
            set_opt(&mut cfg, "data.dir", data.as_ref())?;
            set_opt(&mut cfg, "train.method", method.as_ref())?;
            set_opt(&mut cfg, "train.iterations", *iterations)?;
            if let Some(c) = checkpoint {
                let key = match cfg.method()? {
                    Method::EffortMlp => "train.effort_model",
                    Method::Cnn => "train.checkpoint",
                };
                cfg.set(key, c)?;
            }
        }
        Command::Eval { data, checkpoint, out } => {
            set_opt(&mut cfg, "data.dir", data.as_ref())?;
            set_opt(&mut cfg, "train.checkpoint", checkpoint.as_ref())?;
            set_opt(&mut cfg, "eval.out", out.as_ref())?;
        }
        Command::RunTask {
            task,
            trials,
            estimator,
            checkpoint,
            out,
        } => {
            cfg.set("task.name", task)?;
            set_opt(&mut cfg, "task.trials", *trials)?;
            set_opt(&mut cfg, "task.estimator", estimator.as_ref())?;
            set_opt(&mut cfg, "train.checkpoint", checkpoint.as_ref())?;
            set_opt(&mut cfg, "task.out", out.as_ref())?;
        }
        Command::ExportPlots { input, out } => {
            set_opt(&mut cfg, "plots.input", input.as_ref())?;
            set_opt(&mut cfg, "plots.out", out.as_ref())?;
        }
    }
    Ok(cfg)
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<()> {
    if let Some(n) = cfg.jobs()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    match cli.command {
        Command::GenData { .. } => commands::gen_data(cfg).map(drop),
        Command::Train { .. } => commands::train(cfg).map(drop),
        Command::Eval { .. } => commands::eval(cfg).map(drop),
        Command::RunTask { .. } => commands::run_task(cfg).map(drop),
        Command::ExportPlots { .. } => commands::export_plots(cfg).map(drop),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    eprint!("{}", cfg.to_text());
    match run(&cli, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

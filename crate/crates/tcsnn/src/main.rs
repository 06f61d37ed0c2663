use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tcsnn::{emit_raster, run_experiment, write_events, write_reports, Error, ExperimentConfig};
use tcsnn_core::{synthetic_task, SyntheticTaskConfig};

/// Time-compressed spiking network experiments.
#[derive(Parser)]
#[command(name = "tcsnn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate every ratio of a config; write reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Ratios run in parallel.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, env = "TCSNN_OUT_DIR")]
        out: Option<PathBuf>,
    },
    /// Write baseline and compressed reservoir rasters of one example.
    Raster {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        example: usize,
        #[arg(long)]
        gamma: u32,
        #[arg(long, env = "TCSNN_OUT_DIR")]
        out: Option<PathBuf>,
    },
    /// Write a synthetic task as an event file.
    GenDataset {
        #[arg(long)]
        classes: usize,
        #[arg(long)]
        channels: usize,
        #[arg(long)]
        steps: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 40)]
        examples_per_class: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Config(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e)
        } else {
            Failure::Runtime(e)
        }
    }
}

/// Flag (or environment), then the config's `output_dir`, then `tcsnn-out`.
fn out_dir(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("tcsnn-out"))
}

fn load(path: &Path) -> Result<tcsnn::Experiment, Failure> {
    ExperimentConfig::load(path)
        .and_then(|c| c.prepare())
        .map_err(Failure::Config)
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { config, workers, out } => {
            let exp = load(&config)?;
            let dir = out_dir(out, &exp.config);
            let reports = run_experiment(&exp, workers)?;
            for r in &reports {
                println!(
                    "{:>2}:1  accuracy {:6.2}%  timesteps {:5}  speedup {:6.2}x  energy reduction {:6.2}x",
                    r.gamma, r.accuracy, r.timesteps, r.speedup, r.energy_reduction
                );
            }
            write_reports(&dir, &reports).map_err(Failure::Runtime)?;
            println!("reports written to {}", dir.display());
        }
        Command::Raster {
            config,
            example,
            gamma,
            out,
        } => {
            let exp = load(&config)?;
            let dir = out_dir(out, &exp.config);
            let (a, b) = emit_raster(&exp, example, gamma, &dir)?;
            println!("{}\n{}", a.display(), b.display());
        }
        Command::GenDataset {
            classes,
            channels,
            steps,
            seed,
            examples_per_class,
            out,
        } => {
            let cfg = SyntheticTaskConfig {
                num_classes: classes,
                num_channels: channels,
                length_steps: steps,
                examples_per_class,
                seed,
                ..SyntheticTaskConfig::default()
            };
            let dataset = synthetic_task(&cfg).map_err(|e| Failure::Config(e.into()))?;
            write_events(&out, &dataset).map_err(Failure::Runtime)?;
            println!("{} examples written to {}", dataset.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

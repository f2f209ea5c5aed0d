//! `hydrorl`: experiment driver for environment-aware multi-AUV
//! reinforcement learning.
//!
//! Commands: `train-flow`, `train-rl`, `evolve`, `evaluate`, `report`. On
//! failure a one-line JSON error record goes to stderr and `error.json`
//! into the output directory; usage errors exit 2, runtime failures 1.

use clap::{Parser, Subcommand, ValueEnum};
use hydrorl::env::Mode;
use hydrorl::rl::RlAlgo;
use hydrorl_cli::error::{CliError, ErrorRecord};
use hydrorl_cli::evalcmd::{run_evaluate, EvaluateArgs};
use hydrorl_cli::evolvecmd::{run_evolve, EvolveArgs};
use hydrorl_cli::flowcmd::{run_train_flow, TrainFlowArgs, DEFAULT_FLOW_DATA_SEED};
use hydrorl_cli::profile::Profile;
use hydrorl_cli::reportcmd::{run_report, ReportArgs};
use hydrorl_cli::runs::{run_train_rl, TrainRlArgs};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "hydrorl",
    version,
    about = "Environment-aware reinforcement-learning experiments for multi-AUV control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Sac,
    Td3,
}

impl From<AlgoArg> for RlAlgo {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Sac => RlAlgo::Sac,
            AlgoArg::Td3 => RlAlgo::Td3,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ModeArg {
    EnvAware,
    Traditional,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::EnvAware => Mode::EnvAware,
            ModeArg::Traditional => Mode::Traditional,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train the channel-flow reconstruction network for a hull generation.
    TrainFlow {
        /// Design generation whose cross-section shapes the channel (1-3).
        #[arg(long, default_value_t = 1)]
        hull_generation: u32,
        #[arg(long, value_enum, default_value_t = Profile::Ci)]
        profile: Profile,
        /// Output directory for the model, history and report.
        #[arg(long)]
        out: PathBuf,
        /// Seed for collocation sampling.
        #[arg(long, default_value_t = DEFAULT_FLOW_DATA_SEED)]
        data_seed: u64,
    },
    /// Train one agent per seed and summarize learning plus evaluation.
    TrainRl {
        /// data-collection-normal, data-collection-complex or target-tracking.
        #[arg(long)]
        scenario: String,
        #[arg(long, value_enum)]
        algo: AlgoArg,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Comma-separated seed list; one worker slot per seed.
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        #[arg(long, value_enum, default_value_t = Profile::Ci)]
        profile: Profile,
        #[arg(long)]
        out: PathBuf,
        /// Reuse a flow model directory instead of training one in place.
        #[arg(long)]
        flow_model: Option<PathBuf>,
        /// Parallel worker slots (default: available cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Evolve the hull across design generations with the LLM pipeline
    /// (offline fallback when no backend is configured).
    Evolve {
        #[arg(long)]
        scenario: String,
        #[arg(long, value_enum, default_value_t = AlgoArg::Sac)]
        algo: AlgoArg,
        #[arg(long)]
        generations: u32,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long, value_enum, default_value_t = Profile::Ci)]
        profile: Profile,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        /// Accepted for symmetry with train-rl; evolve always trains
        /// environment-aware agents.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Rerun greedy evaluation for a finished train-rl run.
    Evaluate {
        /// Directory of the train-rl run to evaluate.
        #[arg(long)]
        from: PathBuf,
        /// Evaluation episodes per seed (default: the run's own setting).
        #[arg(long)]
        episodes: Option<usize>,
        /// Output directory (default: <from>/eval).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Aggregate finished runs into a comparison report.
    Report {
        #[arg(long)]
        out: PathBuf,
        /// Run directories to aggregate.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

fn dispatch(command: Command) -> (Option<PathBuf>, Result<(), CliError>) {
    match command {
        Command::TrainFlow {
            hull_generation,
            profile,
            out,
            data_seed,
        } => {
            let args = TrainFlowArgs {
                generation: hull_generation,
                profile,
                out: out.clone(),
                data_seed,
            };
            (Some(out), run_train_flow(&args).map(|_| ()))
        }
        Command::TrainRl {
            scenario,
            algo,
            mode,
            seeds,
            profile,
            out,
            flow_model,
            workers,
        } => {
            let args = TrainRlArgs {
                scenario,
                algo: algo.into(),
                mode: mode.into(),
                seeds,
                profile,
                out: out.clone(),
                flow_model,
                workers,
            };
            (Some(out), run_train_rl(&args).map(|_| ()))
        }
        Command::Evolve {
            scenario,
            algo,
            generations,
            seeds,
            profile,
            out,
            workers,
            mode,
        } => {
            if mode == Some(ModeArg::Traditional) {
                return (
                    Some(out),
                    Err(CliError::Usage(
                        "evolve trains environment-aware agents; --mode traditional is not supported"
                            .into(),
                    )),
                );
            }
            let args = EvolveArgs {
                scenario,
                algo: algo.into(),
                generations,
                seeds,
                profile,
                out: out.clone(),
                workers,
            };
            (Some(out), run_evolve(&args).map(|_| ()))
        }
        Command::Evaluate {
            from,
            episodes,
            out,
            workers,
        } => {
            let args = EvaluateArgs {
                from,
                episodes,
                out,
                workers,
            };
            (Some(args.out_dir()), run_evaluate(&args).map(|_| ()))
        }
        Command::Report { out, inputs } => {
            let args = ReportArgs {
                inputs,
                out: out.clone(),
            };
            (Some(out), run_report(&args).map(|_| ()))
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let (out, result) = dispatch(cli.command);
    match result {
        Ok(()) => {}
        Err(e) => {
            let record = ErrorRecord::new(&e);
            match serde_json::to_string(&record) {
                Ok(line) => eprintln!("{line}"),
                Err(_) => eprintln!("{e}"),
            }
            if let Some(dir) = out {
                let _ = record.write(&dir);
            }
            std::process::exit(e.exit_code());
        }
    }
}

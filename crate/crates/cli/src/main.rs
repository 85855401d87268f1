//! `drvsl`: plan speed limits from a JSON run config and write reports.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Debug, Parser)]
#[command(name = "drvsl", version, about = "Distributionally robust variable speed limits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run ISSA once on the training samples.
    Solve(Common),
    /// Receding-horizon loop against the plant.
    Mpc(Common),
    /// Monte Carlo check of the out-of-sample guarantee.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Overrides `validation.replications`.
        #[arg(long)]
        replications: Option<usize>,
        /// Also compare against the sample-average schedule.
        #[arg(long)]
        compare: bool,
    },
    /// Solve the level-discretized cone program (P5).
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Overrides `misocp.levels`.
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Pick the radius by empirical coverage on fresh training sets.
    TuneRadius(Common),
    /// Draw samples from the config's generator and save them.
    GenSamples {
        #[command(flatten)]
        common: Common,
        /// Defaults to `n_samples`.
        #[arg(long)]
        count: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output_dir` from the config, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Wall-clock budget in seconds for the command's main solver.
    #[arg(long)]
    budget: Option<f64>,
    /// Worker thread cap.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(c) => commands::solve(&c),
        Command::Mpc(c) => commands::mpc(&c),
        Command::Validate { common, replications, compare } => commands::validate(&common, replications, compare),
        Command::Analyze { common, levels } => commands::analyze(&common, levels),
        Command::TuneRadius(c) => commands::tune_radius(&c),
        Command::GenSamples { common, count } => commands::gen_samples(&common, count),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "nashplan", version, about = "Nash-equilibrium trajectory planning for interacting agents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Scenario document (JSON).
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "builtin")]
    pub scenario: Option<PathBuf>,
    /// Built-in scenario: intersection3, quad_swap or quad_diagonal.
    #[arg(long, global = true, value_name = "NAME")]
    pub builtin: Option<String>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Monte-Carlo seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for batch work; 1 runs sequentially.
    #[arg(long, global = true, value_name = "K")]
    pub jobs: Option<usize>,
    /// Also write an SVG plot.
    #[arg(long, global = true)]
    pub plot: bool,
    /// Certify the solution with per-agent best responses.
    #[arg(long, global = true)]
    pub verify: bool,
    /// Maximum relative best-response gap accepted as Nash.
    #[arg(long, global = true, default_value_t = 5e-3)]
    pub tolerance: f64,
    /// Keep every receding-horizon plan in the outputs.
    #[arg(long, global = true)]
    pub keep_plans: bool,
    /// Override the scenario duration (seconds).
    #[arg(long, global = true, value_name = "S")]
    pub duration: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One full-horizon solve of the potential problem.
    Solve,
    /// Receding-horizon run.
    Mpc,
    /// Best-response check of a control sequence.
    VerifyNash {
        /// Controls file written by `solve`.
        #[arg(long, value_name = "PATH", conflicts_with = "resolve")]
        controls: Option<PathBuf>,
        /// Solve the scenario and check the result.
        #[arg(long)]
        resolve: bool,
    },
    /// Monte-Carlo batch of full-horizon solves from random initial states.
    Bench {
        /// Number of samples (overrides the config file).
        #[arg(long)]
        samples: Option<usize>,
        /// Monte-Carlo config (JSON); missing fields take defaults.
        #[arg(long, value_name = "PATH")]
        mc: Option<PathBuf>,
        /// Histogram bins for the timing plot.
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
    /// Render a trajectory CSV as SVG.
    Plot {
        /// Trajectory CSV written by `solve` or `mpc`.
        csv: PathBuf,
    },
}

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use relaxsim::calibration::RelaxMode;
use relaxsim::cf_models::ModelKind;

/// Microscopic merge-bottleneck simulation with lane-changing relaxation.
#[derive(Debug, Parser)]
#[command(name = "relaxsim", version)]
pub struct Cli {
    /// Configuration file (TOML sections; see defaults.cfg). Built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed override for the command's random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory. Defaults to `$RELAXSIM_OUT/<command>`, or `relaxsim-out/<command>`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel runs (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write trajectory, detector and event logs.
    Simulate,
    /// Capacity, discharge, capacity drop and wave period for each on-ramp inflow and relaxation time.
    Capacity {
        /// On-ramp inflows, veh/hr.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        ramp: Vec<f64>,
        /// Relaxation times in s; 0 disables relaxation and a trailing `*` relaxes positive amounts only.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true, value_parser = commands::parse_relax)]
        relax: Vec<commands::RelaxSpec>,
        /// Seeds to average over (default: the config's measurement seeds, or just --seed).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        seeds: Vec<u64>,
    },
    /// Fit a car-following model (and relaxation) to every vehicle of a trajectory dataset.
    Calibrate {
        #[arg(long)]
        dataset: PathBuf,
        /// idm, ovm, newell, linear_newell or linear_second_order.
        #[arg(long, value_parser = clap::value_parser!(ModelKind))]
        model: ModelKind,
        /// none, 1p, 2p or ska.
        #[arg(long = "relax-mode", default_value = "1p", value_parser = clap::value_parser!(RelaxMode))]
        relax_mode: RelaxMode,
        #[arg(long, value_enum, default_value_t = DatasetFormat::Native)]
        format: DatasetFormat,
        /// Restrict to these vehicle ids.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        vehicles: Vec<usize>,
        /// Lane ids that count as on-ramp lanes in NGSim-format files.
        #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "7")]
        ramp_lanes: Vec<i64>,
    },
    /// Write a noise-free synthetic trajectory dataset generated by IDM with one-parameter relaxation.
    Synthesize {
        #[arg(long, default_value_t = 20)]
        followers: usize,
        /// Relaxation time of the generator, s.
        #[arg(long, default_value_t = 8.7)]
        c: f64,
    },
    /// Plot-ready data for the analytical and macroscopic artifacts.
    Analyze {
        #[arg(value_enum)]
        which: Artifact,
        /// Relaxation times for tte_table (0 = none); relaxation time for fd.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        relax: Vec<f64>,
        /// TTE of the unrelaxed row used to fit the speed tolerance, s.
        #[arg(long, default_value_t = 24.3)]
        target_tte: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DatasetFormat {
    Native,
    Ngsim,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Artifact {
    Fig5,
    #[value(name = "tte_table")]
    TteTable,
    Fd,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

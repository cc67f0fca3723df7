//! `thermoreg`: closed-loop simulation and scheduling studies for a heat
//! pump offering frequency-regulation reserves.

mod compare;
mod config;
mod forecast;
mod output;
mod score;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, ExperimentConfig, Overrides};
use output::RunDir;

#[derive(Parser)]
#[command(name = "thermoreg", version, about = "Robust reserve scheduling for a heat pump with a buffer tank")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full control hierarchy on a simulated plant.
    Simulate(Common),
    /// Affine versus open-loop day-ahead schedules at constant demand levels.
    Level1Compare(Common),
    /// Affine schedules versus clairvoyant optima on sampled realizations.
    OmniscientCompare(Common),
    /// Forecast error-correction study and pipeline replay.
    ForecastEval(Common),
    /// Score a 2-second tracking log hour by hour.
    Score {
        /// CSV with `target`, `measured`, `regulation` and `reserve` columns.
        input: PathBuf,
        #[arg(long, default_value = "thermoreg-out")]
        out: PathBuf,
    },
    /// Print the default configuration.
    DefaultConfig,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "thermoreg-out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    days: Option<usize>,
    /// Constant demand, kW thermal.
    #[arg(long)]
    demand: Option<f64>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Scheduling horizon in steps.
    #[arg(long)]
    horizon: Option<usize>,
    /// Wall-clock cap per MILP solve, s. Results then depend on machine speed.
    #[arg(long = "time-cap")]
    time_cap: Option<f64>,
}

impl Common {
    fn load(&self) -> anyhow::Result<(ExperimentConfig, RunDir)> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        Overrides {
            seed: self.seed,
            days: self.days,
            demand: self.demand,
            realizations: self.realizations,
            horizon: self.horizon,
            time_cap: self.time_cap,
        }
        .apply(&mut cfg)?;
        config::validate(&cfg)?;
        let dir = RunDir::create(&self.out)?;
        dir.text("config.toml", &cfg.to_toml())?;
        Ok((cfg, dir))
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate(c) => {
            let (cfg, dir) = c.load()?;
            simulate::cmd_simulate(&cfg, &dir)
        }
        Command::Level1Compare(c) => {
            let (cfg, dir) = c.load()?;
            compare::cmd_level1_compare(&cfg, &dir)
        }
        Command::OmniscientCompare(c) => {
            let (cfg, dir) = c.load()?;
            compare::cmd_omniscient_compare(&cfg, &dir)
        }
        Command::ForecastEval(c) => {
            let (cfg, dir) = c.load()?;
            forecast::cmd_forecast_eval(&cfg, &dir)
        }
        Command::Score { input, out } => score::cmd_score(&input, &RunDir::create(&out)?),
        Command::DefaultConfig => {
            print!("{}", ExperimentConfig::default().to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

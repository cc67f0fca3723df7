//! The three-level hierarchy run against the simulated plant: day-ahead
//! reserves at midnight, intra-day base-load updates every 15 minutes, and
//! a PI loop on the compressor speed every half second.

mod closed_loop;
mod forecaster;
mod levels;
mod pi;

use thiserror::Error;

pub use closed_loop::{run_closed_loop, FastRow, ForecastMode, HourRow, RunFailure, ScenarioConfig, SimulationLog, StepRow};
pub use forecaster::{Forecaster, NetworkForecaster, PerfectForecaster};
pub use levels::{run_level1, run_level2, DayPlan, Level2Decision, SolverSettings};
pub use pi::{pi_step, PiConfig, PiState};

use crate::forecast::ForecastError;
use crate::params::ParamError;
use crate::plant::PlantError;
use crate::robust::{BuildError, ScheduleError};

#[derive(Debug, Error)]
pub enum ControlError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("invalid scenario: {0}")]
    Scenario(String),
}

impl From<BuildError> for ControlError {
    fn from(e: BuildError) -> Self {
        ControlError::Schedule(e.into())
    }
}

//! Ground-truth plant: layered buffer tank, heat-pump actuator, regulation
//! signal and heating demand.

mod demand;
mod heat_pump;
mod signal;
mod tank;

use thiserror::Error;

pub use demand::{gen_demand_profile, DemandConfig, DemandScenario};
pub use heat_pump::{heat_pump_step, HeatPumpConfig, HeatPumpState, HeatPumpStep};
pub use signal::{gen_regulation_signal, interval_stats, load_regulation_csv, IntervalStats, RegSignal, SignalConfig, SignalSource, SAMPLE_PERIOD};
pub use tank::{step_tank, TankConfig};

#[derive(Debug, Error)]
pub enum PlantError {
    #[error("interval {0} lies outside the signal")]
    IntervalOutOfRange(usize),
    #[error("duration {0} s is not a whole number of steps")]
    Duration(u32),
    #[error("row {row}: {reason}")]
    Malformed { row: usize, reason: String },
    #[error("row {row}: value {value} outside [-1, 1]")]
    Range { row: usize, value: f64 },
    #[error("row {row}: sample spacing {gap} s, expected 2 s")]
    Cadence { row: usize, gap: f64 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

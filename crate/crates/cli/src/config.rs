//! Experiment configuration: a TOML file with the system parameters at the
//! top level (keys named after their symbols, e.g. `X_min`, `alpha_COP`)
//! and one optional section per experiment family.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use thermoreg_core::control::ScenarioConfig;
use thermoreg_core::params::{Checked, ParamFile};
use thermoreg_core::plant::DemandConfig;

/// A user error in the configuration or flags (exit status 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Constant-demand sweeps (`level1-compare`, `omniscient-compare`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Constant demand levels, kW thermal.
    pub levels: Vec<f64>,
    /// Initial average tank temperature, °C.
    pub x0: f64,
    /// Largest lag in the feedback matrices; absent keeps the full triangle.
    pub policy_memory: Option<usize>,
    pub nodes: usize,
    pub omniscient_nodes: usize,
    pub realizations: usize,
    /// Realizations per level on which the affine policy's realized cost is
    /// compared with the clairvoyant optimum.
    pub dominance_checks: usize,
    pub seed: u64,
    pub time_cap: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            levels: (1..=10).map(|i| 5.0 * i as f64).collect(),
            x0: 33.0,
            policy_memory: Some(4),
            nodes: 50,
            omniscient_nodes: 20,
            realizations: 100,
            dominance_checks: 10,
            seed: 0,
            time_cap: None,
        }
    }
}

/// `forecast-eval` settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastEvalConfig {
    /// Days replayed after training.
    pub days: usize,
    pub train_days: usize,
    pub demand: DemandConfig,
    pub demand_seed: u64,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub train_seed: u64,
    /// Monte Carlo trials of the correction study.
    pub trials: usize,
    /// Errors stored before the correction study's trials start.
    pub history: usize,
    pub horizon: usize,
    pub ar_coeff: f64,
    pub error_std: f64,
    pub study_seed: u64,
}

impl Default for ForecastEvalConfig {
    fn default() -> Self {
        ForecastEvalConfig {
            days: 7,
            train_days: 7,
            demand: DemandConfig::default(),
            demand_seed: 1,
            hidden: vec![8, 8],
            epochs: 10,
            learning_rate: 1e-3,
            train_seed: 0,
            trials: 1000,
            history: 2000,
            horizon: 96,
            ar_coeff: 0.8,
            error_std: 1.0,
            study_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub params: ParamFile,
    pub scenario: ScenarioConfig,
    pub sweep: SweepConfig,
    pub forecast: ForecastEvalConfig,
}

const SECTIONS: [&str; 3] = ["scenario", "sweep", "forecast"];

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut user: toml::Table = text.parse().map_err(|e: toml::de::Error| config_error(e.to_string()))?;
        let mut cfg = ExperimentConfig::default();
        macro_rules! section {
            ($key:literal, $field:ident) => {
                if let Some(v) = user.remove($key) {
                    cfg.$field = v.try_into().map_err(|e: toml::de::Error| config_error(format!("[{}] {}", $key, e)))?;
                }
            };
        }
        section!("scenario", scenario);
        section!("sweep", sweep);
        section!("forecast", forecast);
        // top-level keys override the default parameter table one by one
        let mut table = toml::Table::try_from(ParamFile::default()).context("default parameters")?;
        for (k, v) in user {
            if !table.contains_key(&k) {
                return Err(config_error(format!("unknown key `{k}` (sections: {})", SECTIONS.join(", "))));
            }
            table.insert(k, v);
        }
        cfg.params = ParamFile::from_toml(&toml::to_string(&table)?).map_err(|e| config_error(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn checked(&self) -> Result<Checked> {
        self.params.clone().checked().map_err(|e| config_error(e.to_string()))
    }
}

/// Values given on the command line; each one overrides the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub days: Option<usize>,
    pub demand: Option<f64>,
    pub realizations: Option<usize>,
    pub horizon: Option<usize>,
    pub time_cap: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(s) = self.seed {
            let sc = &mut cfg.scenario;
            sc.demand_seed = s;
            sc.signal_seed = s.wrapping_add(1);
            sc.noise_seed = s.wrapping_add(2);
            sc.forecast_seed = s.wrapping_add(3);
            cfg.sweep.seed = s;
            cfg.forecast.demand_seed = s;
            cfg.forecast.train_seed = s.wrapping_add(1);
            cfg.forecast.study_seed = s.wrapping_add(2);
        }
        if let Some(d) = self.days {
            cfg.scenario.days = d;
            cfg.forecast.days = d;
        }
        if let Some(v) = self.demand {
            if !v.is_finite() || v < 0.0 {
                return Err(config_error(format!("--demand must be a nonnegative number, got {v}")));
            }
            cfg.sweep.levels = vec![v];
            cfg.scenario.demand = DemandConfig { step_length: cfg.scenario.demand.step_length, ..DemandConfig::flat(v) };
            cfg.forecast.demand = DemandConfig { step_length: cfg.forecast.demand.step_length, ..DemandConfig::flat(v) };
        }
        if let Some(k) = self.realizations {
            cfg.sweep.realizations = k;
        }
        if let Some(n) = self.horizon {
            cfg.params.params.horizon_steps = n;
        }
        if let Some(t) = self.time_cap {
            cfg.sweep.time_cap = Some(t);
            cfg.scenario.solver.time_cap = Some(t);
        }
        Ok(())
    }
}

/// Checks shared by every command.
pub fn validate(cfg: &ExperimentConfig) -> Result<()> {
    let caps = [cfg.sweep.time_cap, cfg.scenario.solver.time_cap];
    if caps.iter().flatten().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(config_error("time cap must be positive"));
    }
    Ok(())
}

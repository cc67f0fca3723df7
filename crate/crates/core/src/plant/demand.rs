use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::forecast::DemandRecord;

/// Synthetic heating-demand generator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemandConfig {
    /// Demand at mean ambient temperature, kW.
    pub level: f64,
    /// Extra demand per °C below the mean ambient temperature, kW/°C.
    pub weather_coupling: f64,
    pub ambient_mean: f64,
    /// Amplitude of the daily ambient cycle (coldest at 05:00), °C.
    pub ambient_daily_amplitude: f64,
    /// Standard deviation of the day-to-day ambient drift, °C.
    pub ambient_drift_std: f64,
    pub ambient_drift_corr: f64,
    /// Coefficient of the per-step AR(1) demand disturbance.
    pub noise_coeff: f64,
    /// Stationary standard deviation of that disturbance, kW.
    pub noise_std: f64,
    /// Limits on the weather-coupled and disturbance terms, kW.
    pub weather_clip: f64,
    pub noise_clip: f64,
    pub min_kw: f64,
    pub max_kw: f64,
    /// Weekday of day 0 (0 = Monday); Saturdays and Sundays are not workdays.
    pub first_weekday: u32,
    pub step_length: u32,
}

impl Default for DemandConfig {
    fn default() -> Self {
        DemandConfig {
            level: 25.0,
            weather_coupling: 1.2,
            ambient_mean: 3.0,
            ambient_daily_amplitude: 4.0,
            ambient_drift_std: 2.5,
            ambient_drift_corr: 0.7,
            noise_coeff: 0.9,
            noise_std: 1.2,
            weather_clip: 12.0,
            noise_clip: 4.0,
            min_kw: 10.0,
            max_kw: 45.0,
            first_weekday: 0,
            step_length: 900,
        }
    }
}

impl DemandConfig {
    /// No weather variation and no disturbance: demand equals `level`.
    pub fn flat(level: f64) -> Self {
        DemandConfig {
            level,
            ambient_daily_amplitude: 0.0,
            ambient_drift_std: 0.0,
            noise_std: 0.0,
            min_kw: 0.0,
            max_kw: f64::INFINITY,
            ..Default::default()
        }
    }

    pub fn steps_per_day(&self) -> usize {
        (86_400 / self.step_length) as usize
    }
}

/// True demand per step (held constant within the step) with its weather
/// trace and workday calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandScenario {
    pub step_length: u32,
    pub demand: Vec<f64>,
    pub ambient: Vec<f64>,
    pub workday: Vec<bool>,
}

impl DemandScenario {
    pub fn len(&self) -> usize {
        self.demand.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demand.is_empty()
    }

    /// Demand in force at time `t` seconds.
    pub fn at(&self, t: f64) -> f64 {
        let k = (t / self.step_length as f64).floor() as usize;
        self.demand[k.min(self.demand.len() - 1)]
    }

    pub fn to_records(&self) -> Vec<DemandRecord> {
        (0..self.len())
            .map(|k| DemandRecord {
                timestamp: k as u64 * self.step_length as u64,
                ambient_temp: self.ambient[k],
                demand_kw: self.demand[k],
                workday: self.workday[k],
            })
            .collect()
    }

    pub fn from_records(records: &[DemandRecord], step_length: u32) -> Self {
        DemandScenario {
            step_length,
            demand: records.iter().map(|r| r.demand_kw).collect(),
            ambient: records.iter().map(|r| r.ambient_temp).collect(),
            workday: records.iter().map(|r| r.workday).collect(),
        }
    }

    /// Steps `from..to` as a new scenario.
    pub fn slice(&self, from: usize, to: usize) -> Self {
        DemandScenario {
            step_length: self.step_length,
            demand: self.demand[from..to].to_vec(),
            ambient: self.ambient[from..to].to_vec(),
            workday: self.workday[from..to].to_vec(),
        }
    }
}

/// Demand = level + weather-coupled term + AR(1) disturbance, clipped to
/// `[min_kw, max_kw]`.
pub fn gen_demand_profile(seed: u64, days: usize, cfg: &DemandConfig) -> DemandScenario {
    let per_day = cfg.steps_per_day();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let drift_b = cfg.ambient_drift_std * (1.0 - cfg.ambient_drift_corr.powi(2)).sqrt();
    let noise_b = cfg.noise_std * (1.0 - cfg.noise_coeff.powi(2)).sqrt();
    let mut drift = cfg.ambient_drift_std * normal();
    let mut noise = cfg.noise_std * normal();
    let n = days * per_day;
    let mut sc = DemandScenario { step_length: cfg.step_length, demand: Vec::with_capacity(n), ambient: Vec::with_capacity(n), workday: Vec::with_capacity(n) };
    for d in 0..days {
        let next = cfg.ambient_drift_corr * drift + drift_b * normal();
        let workday = (cfg.first_weekday as usize + d) % 7 < 5;
        for s in 0..per_day {
            let frac = s as f64 / per_day as f64;
            // drift blends linearly into the next day's value
            let day_drift = drift + (next - drift) * frac;
            let hour = 24.0 * frac;
            let cycle = -(2.0 * std::f64::consts::PI * (hour - 5.0) / 24.0).cos();
            let ambient = cfg.ambient_mean + cfg.ambient_daily_amplitude * cycle + day_drift;
            noise = cfg.noise_coeff * noise + noise_b * normal();
            let weather = (cfg.weather_coupling * (cfg.ambient_mean - ambient)).clamp(-cfg.weather_clip, cfg.weather_clip);
            let v = cfg.level + weather + noise.clamp(-cfg.noise_clip, cfg.noise_clip);
            sc.demand.push(v.clamp(cfg.min_kw.max(0.0), cfg.max_kw));
            sc.ambient.push(ambient);
            sc.workday.push(workday);
        }
        drift = next;
    }
    sc
}

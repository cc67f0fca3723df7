use anyhow::Result;
use serde::Serialize;
use thermoreg_core::control::{run_closed_loop, SimulationLog};
use thermoreg_core::forecast::STEPS_PER_DAY;
use thermoreg_core::scoring::{flexibility_share, OPERATION_LIMIT, QUALIFICATION_LIMIT};
use thermoreg_opt::MilpStatus;

use crate::config::{config_error, ExperimentConfig};
use crate::output::RunDir;

/// Temperatures are compared with the band and the logged slack at this
/// resolution, °C.
const TEMP_TOL: f64 = 1e-6;

#[derive(Debug, Serialize)]
struct PlanRow {
    day: usize,
    step: usize,
    reserves: f64,
    base: f64,
    on: bool,
    slack: f64,
    forecast: f64,
}

#[derive(Debug, Serialize)]
pub struct Comfort {
    pub min_top_layer: f64,
    pub min_average: f64,
    pub max_average: f64,
    /// Steps ending with the average temperature outside the band.
    pub excursion_steps: usize,
    /// Of those, steps whose excess exceeds the planned slack.
    pub uncovered_steps: usize,
}

#[derive(Debug, Serialize)]
pub struct Tracking {
    pub scored_hours: usize,
    pub mean_composite: Option<f64>,
    pub min_rolling: Option<f64>,
    /// Share of scored hours whose rolling average meets the qualification limit.
    pub qualified_share: Option<f64>,
    /// Share of scored hours whose rolling average meets the operation limit.
    pub operational_share: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Flexibility {
    pub overall: f64,
    pub per_day: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Solver {
    pub level1_solves: usize,
    pub level1_optimal: usize,
    pub level2_optimal: usize,
    pub level2_at_limit: usize,
}

#[derive(Debug, Serialize)]
pub struct SimulationSummary {
    pub completed: bool,
    pub error: Option<String>,
    pub days: usize,
    pub steps: usize,
    pub comfort: Comfort,
    pub tracking: Tracking,
    pub flexibility: Flexibility,
    pub solver: Solver,
}

pub fn summarize(log: &SimulationLog, x_min: f64, x_max: f64) -> SimulationSummary {
    let st = &log.steps;
    let fold = |f: fn(&thermoreg_core::control::StepRow) -> f64, init: f64, op: fn(f64, f64) -> f64| st.iter().map(f).fold(init, op);
    let excess = |x: f64| (x - x_max).max(x_min - x).max(0.0);
    let outside: Vec<_> = st.iter().filter(|s| excess(s.x_end) > TEMP_TOL).collect();
    let comfort = Comfort {
        min_top_layer: fold(|s| s.layer0, f64::INFINITY, f64::min),
        min_average: fold(|s| s.x_end.min(s.x_start), f64::INFINITY, f64::min),
        max_average: fold(|s| s.x_end.max(s.x_start), f64::NEG_INFINITY, f64::max),
        excursion_steps: outside.len(),
        uncovered_steps: outside.iter().filter(|s| excess(s.x_end) > s.slack + TEMP_TOL).count(),
    };
    let scored: Vec<_> = log.hours.iter().filter(|h| h.composite.is_some()).collect();
    let share = |limit: f64| (!scored.is_empty()).then(|| scored.iter().filter(|h| h.rolling.unwrap_or(0.0) >= limit).count() as f64 / scored.len() as f64);
    let tracking = Tracking {
        scored_hours: scored.len(),
        mean_composite: (!scored.is_empty()).then(|| scored.iter().filter_map(|h| h.composite).sum::<f64>() / scored.len() as f64),
        min_rolling: scored.iter().filter_map(|h| h.rolling).reduce(f64::min),
        qualified_share: share(QUALIFICATION_LIMIT),
        operational_share: share(OPERATION_LIMIT),
    };
    let r: Vec<f64> = st.iter().map(|s| s.r).collect();
    let u: Vec<f64> = st.iter().map(|s| s.mean_measured).collect();
    let flexibility = Flexibility {
        overall: flexibility_share(&r, &u),
        per_day: r.chunks(STEPS_PER_DAY).zip(u.chunks(STEPS_PER_DAY)).map(|(r, u)| flexibility_share(r, u)).collect(),
    };
    let l2: Vec<_> = st.iter().filter(|s| s.level == 2).collect();
    let solver = Solver {
        level1_solves: log.plans.len(),
        level1_optimal: log.plans.iter().filter(|p| p.status == MilpStatus::Optimal).count(),
        level2_optimal: l2.iter().filter(|s| s.status == format!("{:?}", MilpStatus::Optimal)).count(),
        level2_at_limit: l2.iter().filter(|s| s.status == format!("{:?}", MilpStatus::FeasibleAtLimit)).count(),
    };
    SimulationSummary {
        completed: true,
        error: None,
        days: st.len().div_ceil(STEPS_PER_DAY),
        steps: st.len(),
        comfort,
        tracking,
        flexibility,
        solver,
    }
}

fn write_logs(dir: &RunDir, log: &SimulationLog) -> Result<()> {
    dir.csv("fast.csv", &log.fast)?;
    dir.csv("steps.csv", &log.steps)?;
    dir.csv("hours.csv", &log.hours)?;
    let plans: Vec<PlanRow> = log
        .plans
        .iter()
        .flat_map(|p| {
            (0..p.reserves.len()).map(move |k| PlanRow {
                day: p.day,
                step: k,
                reserves: p.reserves[k],
                base: p.policy.base[k],
                on: p.policy.on[k],
                slack: p.policy.slack[k],
                forecast: p.forecast[k],
            })
        })
        .collect();
    dir.csv("plans.csv", &plans)
}

pub fn cmd_simulate(cfg: &ExperimentConfig, dir: &RunDir) -> Result<()> {
    if cfg.scenario.days == 0 {
        return Err(config_error("days must be at least 1"));
    }
    let checked = cfg.checked()?;
    let (x_min, x_max) = (checked.params.x_min, checked.params.x_max);
    match run_closed_loop(&checked, &cfg.scenario) {
        Ok(log) => {
            write_logs(dir, &log)?;
            dir.toml("summary.toml", &summarize(&log, x_min, x_max))
        }
        Err(fail) => {
            write_logs(dir, &fail.partial)?;
            let mut summary = summarize(&fail.partial, x_min, x_max);
            summary.completed = false;
            summary.error = Some(fail.error.to_string());
            dir.toml("summary.toml", &summary)?;
            Err(fail.into())
        }
    }
}

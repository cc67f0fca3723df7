use std::time::Duration;

use serde::{Deserialize, Serialize};
use thermoreg_opt::{MilpLimits, MilpStatus};

use super::ControlError;
use crate::params::Checked;
use crate::robust::{solve_schedule_hinted, AffinePolicy, BuildError, BuildOptions, Hint, Mode, ScheduleError, ScheduleProblem};

/// Node caps and policy memory for the two scheduling levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub level1_nodes: usize,
    pub level2_nodes: usize,
    /// Largest lag kept in the feedback matrices (`None`: full triangle).
    pub level1_memory: Option<usize>,
    pub level2_memory: Option<usize>,
    /// Wall-clock cap per solve, s. Off by default: a time cap makes
    /// results depend on machine speed.
    pub time_cap: Option<f64>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { level1_nodes: 50, level2_nodes: 20, level1_memory: Some(4), level2_memory: Some(4), time_cap: None }
    }
}

impl SolverSettings {
    pub fn limits(&self, nodes: usize) -> MilpLimits {
        MilpLimits { max_nodes: nodes, time_limit: self.time_cap.map(Duration::from_secs_f64), ..MilpLimits::default() }
    }
}

/// Day-ahead commitment: reserves are fixed once published.
#[derive(Debug, Clone, PartialEq)]
pub struct DayPlan {
    pub day: usize,
    pub reserves: Vec<f64>,
    pub policy: AffinePolicy,
    pub forecast: Vec<f64>,
    pub status: MilpStatus,
    /// Lower bound on the plan objective.
    pub bound: f64,
}

/// Day-ahead robust problem. With `offer_reserves` false the plan is the
/// same schedule with every reserve pinned to zero.
pub fn run_level1(checked: &Checked, day: usize, x0: f64, forecast: Vec<f64>, settings: &SolverSettings, offer_reserves: bool) -> Result<DayPlan, ControlError> {
    let n = checked.params.horizon_steps;
    let mode = if offer_reserves { Mode::Affine } else { Mode::Level2 { kappa: 1, reserves: vec![0.0; n], prev_on: None } };
    let sp = ScheduleProblem::new(checked, x0, forecast.clone(), mode)?.with_options(BuildOptions { policy_memory: settings.level1_memory, ..Default::default() });
    let solved = solve_schedule_hinted(&sp, &settings.limits(settings.level1_nodes), &[])?;
    Ok(DayPlan {
        day,
        reserves: solved.policy.reserves.clone(),
        policy: solved.policy,
        forecast,
        status: solved.solution.status,
        bound: solved.solution.bound,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Level2Decision {
    pub policy: AffinePolicy,
    pub status: MilpStatus,
}

impl Level2Decision {
    /// Base load for the first step, kW.
    pub fn base(&self) -> f64 {
        self.policy.base[0]
    }

    pub fn on(&self) -> bool {
        self.policy.on[0]
    }

    /// Planned temperature-bound slack at the end of the first step, °C.
    pub fn slack(&self) -> f64 {
        self.policy.slack[0]
    }
}

/// Shrinking-horizon re-optimization from step `kappa` (1-based) with the
/// published reserves. `hints` are earlier schedules for the same steps.
/// The on/off state of the first block, the one about to be applied, is
/// branched on explicitly: both states are solved and the cheaper one kept.
pub fn run_level2(
    checked: &Checked,
    kappa: usize,
    x: f64,
    forecast: Vec<f64>,
    plan: &DayPlan,
    prev_on: Option<bool>,
    hints: &[Hint],
    settings: &SolverSettings,
) -> Result<Level2Decision, ControlError> {
    let reserves = plan.reserves[kappa - 1..].to_vec();
    let sp = ScheduleProblem::new(checked, x, forecast, Mode::Level2 { kappa, reserves, prev_on })?;
    let limits = settings.limits(settings.level2_nodes);
    let mut best: Option<Level2Decision> = None;
    let mut failure = None;
    let mut all_optimal = true;
    for first in [false, true] {
        let branch = sp.clone().with_options(BuildOptions { policy_memory: settings.level2_memory, first_block_on: Some(first), ..Default::default() });
        let block = checked.params.hp_block_steps.max(1);
        let first_len = block - (kappa - 1) % block;
        let branch_hints: Vec<Hint> = hints
            .iter()
            .map(|h| {
                let mut h = h.clone();
                for on in h.on.iter_mut().take(first_len) {
                    *on = first;
                }
                h
            })
            .collect();
        match solve_schedule_hinted(&branch, &limits, &branch_hints) {
            Ok(solved) => {
                all_optimal &= solved.solution.status == MilpStatus::Optimal;
                if best.as_ref().is_none_or(|b| solved.policy.objective < b.policy.objective) {
                    best = Some(Level2Decision { policy: solved.policy, status: solved.solution.status });
                }
            }
            Err(ScheduleError::Build(BuildError::Pinned(_))) => {}
            Err(e @ ScheduleError::NoSolution(_)) => {
                all_optimal = false;
                failure = Some(e);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let Some(mut d) = best else {
        return Err(failure.expect("an unpinned branch was solved").into());
    };
    d.status = if all_optimal { MilpStatus::Optimal } else { MilpStatus::FeasibleAtLimit };
    Ok(d)
}

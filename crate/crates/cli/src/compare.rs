use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thermoreg_core::params::Checked;
use thermoreg_core::robust::{realized_outcome, solve_schedule, solve_schedule_hinted, BuildOptions, Hint, Mode, Realization, ScheduleProblem, Solved};
use thermoreg_opt::MilpLimits;

use crate::config::{config_error, ExperimentConfig, SweepConfig};
use crate::output::RunDir;

/// Relative tolerance of the per-realization dominance check.
pub const DOMINANCE_TOL: f64 = 1e-6;

fn limits(sw: &SweepConfig, nodes: usize) -> MilpLimits {
    MilpLimits { max_nodes: nodes, time_limit: sw.time_cap.map(Duration::from_secs_f64), ..MilpLimits::default() }
}

fn check_sweep(sw: &SweepConfig) -> Result<()> {
    if sw.levels.is_empty() || sw.levels.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(config_error("demand levels must be a nonempty list of nonnegative numbers"));
    }
    if sw.nodes == 0 || sw.omniscient_nodes == 0 {
        return Err(config_error("node caps must be positive"));
    }
    Ok(())
}

fn problem(checked: &Checked, sw: &SweepConfig, level: f64, mode: Mode) -> Result<ScheduleProblem> {
    let n = checked.params.horizon_steps;
    Ok(ScheduleProblem::new(checked, sw.x0, vec![level; n], mode)?.with_options(BuildOptions { policy_memory: sw.policy_memory, ..Default::default() }))
}

#[derive(Debug, Clone, Serialize)]
pub struct Level1Row {
    pub demand: f64,
    pub mode: String,
    pub objective: f64,
    pub reserves: f64,
    /// Σ u⁰ over the day, kWh electric.
    pub energy: f64,
    pub status: String,
    pub bound: f64,
    pub nodes: usize,
}

fn level1_row(sp: &ScheduleProblem, s: &Solved, level: f64) -> Level1Row {
    let hours = sp.params.step_length as f64 / 3600.0;
    Level1Row {
        demand: level,
        mode: sp.mode.name().to_string(),
        objective: s.policy.objective,
        reserves: s.policy.total_reserves(),
        energy: s.policy.base.iter().sum::<f64>() * hours,
        status: format!("{:?}", s.solution.status),
        bound: s.solution.bound,
        nodes: s.solution.nodes,
    }
}

pub fn level1_rows(checked: &Checked, sw: &SweepConfig) -> Result<Vec<Level1Row>> {
    check_sweep(sw)?;
    let jobs: Vec<(f64, Mode)> = sw.levels.iter().flat_map(|&v| [(v, Mode::Affine), (v, Mode::OpenLoop)]).collect();
    jobs.into_par_iter()
        .map(|(v, mode)| {
            let sp = problem(checked, sw, v, mode)?;
            let t = Instant::now();
            let s = solve_schedule(&sp, &limits(sw, sw.nodes)).with_context(|| format!("{} at {v} kW", sp.mode.name()))?;
            eprintln!("{:>16} {v:>6} kW  {:.1} s", sp.mode.name(), t.elapsed().as_secs_f64());
            Ok(level1_row(&sp, &s, v))
        })
        .collect()
}

pub fn cmd_level1_compare(cfg: &ExperimentConfig, dir: &RunDir) -> Result<()> {
    let rows = level1_rows(&cfg.checked()?, &cfg.sweep)?;
    dir.csv("level1.csv", &rows)?;
    dir.toml("summary.toml", &Level1Summary::new(&rows))
}

#[derive(Debug, Serialize)]
struct Level1Summary {
    levels: usize,
    affine_reserves: f64,
    openloop_reserves: f64,
    affine_objective: f64,
    openloop_objective: f64,
}

impl Level1Summary {
    fn new(rows: &[Level1Row]) -> Self {
        let sum = |mode: &str, f: fn(&Level1Row) -> f64| rows.iter().filter(|r| r.mode == mode).map(f).sum::<f64>();
        Level1Summary {
            levels: rows.len() / 2,
            affine_reserves: sum("robust-affine", |r| r.reserves),
            openloop_reserves: sum("robust-openloop", |r| r.reserves),
            affine_objective: sum("robust-affine", |r| r.objective),
            openloop_objective: sum("robust-openloop", |r| r.objective),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RealizationRow {
    pub demand: f64,
    pub index: usize,
    pub objective: f64,
    pub reserves: f64,
    pub status: String,
    pub bound: f64,
    /// Cost of the affine policy played against the same realization.
    pub affine_realized_cost: f64,
    pub dominance_checked: bool,
    pub dominated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OmniscientRow {
    pub demand: f64,
    pub affine_objective: f64,
    pub affine_reserves: f64,
    pub affine_status: String,
    /// Lowest clairvoyant objective over the realizations and its reserves.
    pub best_objective: f64,
    pub best_reserves: f64,
    pub worst_objective: f64,
    pub worst_reserves: f64,
    pub mean_objective: f64,
    pub mean_reserves: f64,
    pub dominance_checks: usize,
    pub dominance_failures: usize,
}

/// Seed of realization `index` at level position `level`.
fn realization_seed(seed: u64, level: usize, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((level as u64) << 32) ^ index as u64
}

pub fn omniscient_rows(checked: &Checked, sw: &SweepConfig) -> Result<(Vec<OmniscientRow>, Vec<RealizationRow>)> {
    check_sweep(sw)?;
    if sw.realizations == 0 {
        return Err(config_error("realizations must be at least 1"));
    }
    let n = checked.params.horizon_steps;
    let affine: Vec<(ScheduleProblem, Solved)> = sw
        .levels
        .par_iter()
        .map(|&v| {
            let sp = problem(checked, sw, v, Mode::Affine)?;
            let s = solve_schedule(&sp, &limits(sw, sw.nodes)).with_context(|| format!("affine at {v} kW"))?;
            Ok((sp, s))
        })
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..sw.levels.len()).flat_map(|l| (0..sw.realizations).map(move |i| (l, i))).collect();
    let rows: Vec<RealizationRow> = jobs
        .into_par_iter()
        .map(|(l, i)| {
            let (sp, af) = &affine[l];
            let rz = Realization::sample(&mut ChaCha8Rng::seed_from_u64(realization_seed(sw.seed, l, i)), &sp.sets, n);
            let realized = realized_outcome(&af.policy, sp, &rz).cost;
            let om_sp = sp.with_mode(Mode::Omniscient(rz))?;
            let t = Instant::now();
            let om = solve_schedule_hinted(&om_sp, &limits(sw, sw.omniscient_nodes), &[Hint::from_policy(&af.policy)])
                .with_context(|| format!("omniscient at {} kW, realization {i}", sw.levels[l]))?;
            eprintln!("omniscient {:>6} kW #{i:<4} {:.2} s", sw.levels[l], t.elapsed().as_secs_f64());
            let checked = i < sw.dominance_checks;
            Ok(RealizationRow {
                demand: sw.levels[l],
                index: i,
                objective: om.policy.objective,
                reserves: om.policy.total_reserves(),
                status: format!("{:?}", om.solution.status),
                bound: om.solution.bound,
                affine_realized_cost: realized,
                dominance_checked: checked,
                dominated: om.policy.objective <= realized + DOMINANCE_TOL * realized.abs().max(1.0),
            })
        })
        .collect::<Result<_>>()?;
    let summary = affine
        .iter()
        .enumerate()
        .map(|(l, (_, af))| {
            let mine = &rows[l * sw.realizations..(l + 1) * sw.realizations];
            let best = mine.iter().min_by(|a, b| a.objective.total_cmp(&b.objective)).expect("at least one realization");
            let worst = mine.iter().max_by(|a, b| a.objective.total_cmp(&b.objective)).expect("at least one realization");
            let k = mine.len() as f64;
            OmniscientRow {
                demand: sw.levels[l],
                affine_objective: af.policy.objective,
                affine_reserves: af.policy.total_reserves(),
                affine_status: format!("{:?}", af.solution.status),
                best_objective: best.objective,
                best_reserves: best.reserves,
                worst_objective: worst.objective,
                worst_reserves: worst.reserves,
                mean_objective: mine.iter().map(|r| r.objective).sum::<f64>() / k,
                mean_reserves: mine.iter().map(|r| r.reserves).sum::<f64>() / k,
                dominance_checks: mine.iter().filter(|r| r.dominance_checked).count(),
                dominance_failures: mine.iter().filter(|r| r.dominance_checked && !r.dominated).count(),
            }
        })
        .collect();
    Ok((summary, rows))
}

pub fn cmd_omniscient_compare(cfg: &ExperimentConfig, dir: &RunDir) -> Result<()> {
    let (summary, rows) = omniscient_rows(&cfg.checked()?, &cfg.sweep)?;
    dir.csv("omniscient.csv", &summary)?;
    dir.csv("realizations.csv", &rows)
}

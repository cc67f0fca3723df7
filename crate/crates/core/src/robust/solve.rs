//! Solving scheduling problems end to end.

use thermoreg_opt::{solve_lp, solve_milp, solve_milp_with_incumbent, LpStatus, MilpError, MilpLimits, MilpSolution, MilpStatus};
use thiserror::Error;

use super::policy::{extract_policy, AffinePolicy, PolicyError};
use super::schedule::{build, BuildError, Layout, Mode, ScheduleMilp, ScheduleProblem};

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("no feasible schedule ({0:?})")]
    NoSolution(MilpStatus),
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub policy: AffinePolicy,
    pub solution: MilpSolution,
    pub layout: Layout,
    pub rows: usize,
    pub columns: usize,
}

/// On/off pattern of a known schedule, used to warm-start a solve. Step 0
/// is the first step of the problem being solved.
#[derive(Debug, Clone, PartialEq)]
pub struct Hint {
    pub on: Vec<bool>,
    pub reserve_flag: Vec<bool>,
}

impl Hint {
    pub fn from_policy(p: &AffinePolicy) -> Self {
        Hint { on: p.on.clone(), reserve_flag: p.reserve_flag.clone() }
    }

    /// The pattern from step `from` on.
    pub fn tail(&self, from: usize) -> Self {
        Hint { on: self.on[from.min(self.on.len())..].to_vec(), reserve_flag: self.reserve_flag[from.min(self.reserve_flag.len())..].to_vec() }
    }
}

/// Best continuous completion of a fixed on/off pattern, if it is feasible.
fn completion(milp: &ScheduleMilp, hint: &Hint, limits: &MilpLimits) -> Option<Vec<f64>> {
    let layout = &milp.layout;
    if hint.on.len() != layout.n {
        return None;
    }
    let mut lp = milp.problem.lp.clone();
    let mut fix = |j: usize, v: bool| {
        let v = if v { 1.0 } else { 0.0 };
        let fits = lp.lower[j] <= v && v <= lp.upper[j];
        lp.lower[j] = v;
        lp.upper[j] = v;
        fits
    };
    for k in 0..layout.n {
        if !fix(layout.z[k], hint.on[k]) {
            return None;
        }
        if let (Some(j), Some(&f)) = (layout.zt[k], hint.reserve_flag.get(k)) {
            if !fix(j, f) {
                return None;
            }
        }
    }
    let sol = solve_lp(&lp, &limits.lp).ok()?;
    (sol.status == LpStatus::Optimal).then_some(sol.x)
}

/// Builds and solves `sp`. Affine problems are seeded with the open-loop
/// optimum, so their objective never exceeds it.
pub fn solve_schedule(sp: &ScheduleProblem, limits: &MilpLimits) -> Result<Solved, ScheduleError> {
    solve_schedule_hinted(sp, limits, &[])
}

/// As [`solve_schedule`], additionally seeded with the best continuous
/// completion among `hints`.
pub fn solve_schedule_hinted(sp: &ScheduleProblem, limits: &MilpLimits, hints: &[Hint]) -> Result<Solved, ScheduleError> {
    let mut hints = hints.to_vec();
    if sp.mode == Mode::Affine {
        let ol = solve_schedule(&sp.with_mode(Mode::OpenLoop)?, limits)?;
        hints.push(Hint::from_policy(&ol.policy));
    }
    let milp = build(sp)?;
    let mut seed: Option<Vec<f64>> = None;
    for h in &hints {
        if let Some(x) = completion(&milp, h, limits) {
            let obj = milp.problem.lp.objective_value(&x);
            if seed.as_ref().is_none_or(|b| obj < milp.problem.lp.objective_value(b)) {
                seed = Some(x);
            }
        }
    }
    let solution = match solve_milp_with_incumbent(&milp.problem, limits, seed.as_deref()) {
        Err(MilpError::BadIncumbent(_)) => solve_milp(&milp.problem, limits)?,
        other => other?,
    };
    if !solution.status.has_solution() {
        return Err(ScheduleError::NoSolution(solution.status));
    }
    let policy = extract_policy(&solution, &milp.layout)?;
    Ok(Solved {
        policy,
        rows: milp.problem.lp.num_rows(),
        columns: milp.problem.lp.num_vars(),
        solution,
        layout: milp.layout,
    })
}

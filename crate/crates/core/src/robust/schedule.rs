//! Scheduling problems and their deterministic MILP counterparts.

use rand::Rng;
use thermoreg_opt::{LinearProgram, MilpProblem, Sense};
use thiserror::Error;

use super::counterpart::{Affine, CounterpartMode, Robustifier, UncertainRow, UncertainTerm};
use crate::params::{discretize, Checked, DiscreteModel, SystemParams, UncertaintySets};

#[derive(Debug, Error, PartialEq)]
pub enum BuildError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("wrong problem mode: expected {expected}, got {got}")]
    Mode { expected: &'static str, got: &'static str },
    #[error("the first block is already pinned {0}")]
    Pinned(&'static str),
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
}

/// One draw of every disturbance over the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    /// Interval means of the regulation signal.
    pub wbar: Vec<f64>,
    pub wmin: Vec<f64>,
    pub wmax: Vec<f64>,
    /// Joint heat-pump and forecast error δ + e, kW thermal.
    pub de: Vec<f64>,
}

impl Realization {
    pub fn zero(n: usize) -> Self {
        Realization { wbar: vec![0.0; n], wmin: vec![0.0; n], wmax: vec![0.0; n], de: vec![0.0; n] }
    }

    /// Uniform draw inside the sets: `wmin ≤ wbar ≤ wmax` within `W`.
    pub fn sample(rng: &mut impl Rng, sets: &UncertaintySets, n: usize) -> Self {
        let mut rz = Realization::zero(n);
        for k in 0..n {
            let wbar = rng.random_range(sets.wbar.lo..=sets.wbar.hi);
            rz.wbar[k] = wbar;
            rz.wmin[k] = rng.random_range(sets.w.lo..=wbar);
            rz.wmax[k] = rng.random_range(wbar..=sets.w.hi);
            rz.de[k] = rng.random_range(sets.de.lo..=sets.de.hi);
        }
        rz
    }

    pub fn len(&self) -> usize {
        self.wbar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wbar.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    /// Day-ahead problem with affine disturbance feedback.
    Affine,
    /// Day-ahead problem with all feedback matrices fixed to zero.
    OpenLoop,
    /// Clairvoyant problem on a known realization.
    Omniscient(Realization),
    /// Intra-day re-optimization from step `kappa` (1-based) to the end of the
    /// day with reserves fixed. `prev_on` is the on/off state of the previous
    /// step, used to hold the on/off flag across a block that is already running.
    Level2 { kappa: usize, reserves: Vec<f64>, prev_on: Option<bool> },
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Affine => "robust-affine",
            Mode::OpenLoop => "robust-openloop",
            Mode::Omniscient(_) => "omniscient",
            Mode::Level2 { .. } => "level2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    /// Largest lag `k − j` with a nonzero feedback entry; `None` keeps the full
    /// strictly lower triangle.
    pub policy_memory: Option<usize>,
    pub counterpart: CounterpartMode,
    /// Fixes the on/off flag of the first block (all steps linked to step 0).
    pub first_block_on: Option<bool>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { policy_memory: None, counterpart: CounterpartMode::Split, first_block_on: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleProblem {
    pub params: SystemParams,
    pub sets: UncertaintySets,
    pub model: DiscreteModel,
    /// Initial average tank temperature, °C.
    pub x0: f64,
    /// Demand forecast per remaining step, kW thermal.
    pub forecast: Vec<f64>,
    pub mode: Mode,
    pub options: BuildOptions,
}

impl ScheduleProblem {
    pub fn new(checked: &Checked, x0: f64, forecast: Vec<f64>, mode: Mode) -> Result<Self, BuildError> {
        let sp = ScheduleProblem {
            params: checked.params.clone(),
            sets: checked.sets.clone(),
            model: discretize(&checked.params),
            x0,
            forecast,
            mode,
            options: BuildOptions::default(),
        };
        sp.validate()?;
        Ok(sp)
    }

    pub fn with_mode(&self, mode: Mode) -> Result<Self, BuildError> {
        let sp = ScheduleProblem { mode, ..self.clone() };
        sp.validate()?;
        Ok(sp)
    }

    pub fn with_options(mut self, options: BuildOptions) -> Self {
        self.options = options;
        self
    }

    pub fn horizon(&self) -> usize {
        self.forecast.len()
    }

    /// Absolute day step of the first horizon step (0-based).
    pub fn offset(&self) -> usize {
        match &self.mode {
            Mode::Level2 { kappa, .. } => kappa - 1,
            _ => 0,
        }
    }

    pub fn validate(&self) -> Result<(), BuildError> {
        if !self.x0.is_finite() {
            return Err(BuildError::NonFinite("x0"));
        }
        if self.forecast.iter().any(|v| !v.is_finite()) {
            return Err(BuildError::NonFinite("forecast"));
        }
        let n_day = self.params.horizon_steps;
        let n = self.horizon();
        match &self.mode {
            Mode::Level2 { kappa, reserves, .. } => {
                if *kappa < 1 || *kappa > n_day {
                    return Err(BuildError::Dimension(format!("kappa {kappa} outside [1, {n_day}]")));
                }
                let want = n_day - kappa + 1;
                if n != want || reserves.len() != want {
                    return Err(BuildError::Dimension(format!(
                        "level 2 from step {kappa} needs {want} forecasts and reserves, got {n} and {}",
                        reserves.len()
                    )));
                }
                if reserves.iter().any(|r| !r.is_finite() || *r < 0.0) {
                    return Err(BuildError::NonFinite("reserves"));
                }
            }
            other => {
                if n != n_day {
                    return Err(BuildError::Dimension(format!("forecast length {n} != horizon {n_day}")));
                }
                if let Mode::Omniscient(rz) = other {
                    let lens = [rz.wbar.len(), rz.wmin.len(), rz.wmax.len(), rz.de.len()];
                    if lens.iter().any(|&l| l != n) {
                        return Err(BuildError::Dimension(format!("realization lengths {lens:?} != horizon {n}")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Feedback entry `D[k][j] = x[p] − x[q]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyEntry {
    pub k: usize,
    pub j: usize,
    pub p: usize,
    pub q: usize,
}

/// Column positions of the decision variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub n: usize,
    pub offset: usize,
    pub u0: Vec<usize>,
    pub r: Vec<usize>,
    pub z: Vec<usize>,
    /// Absent in Level 2, where reserves are data.
    pub zt: Vec<Option<usize>>,
    pub eps: Vec<usize>,
    pub dw: Vec<PolicyEntry>,
    pub dd: Vec<PolicyEntry>,
    /// Number of columns before the robust auxiliaries.
    pub primary_columns: usize,
}

#[derive(Debug)]
pub struct ScheduleMilp {
    pub problem: MilpProblem,
    pub layout: Layout,
    pub robustifier: Robustifier,
}

impl ScheduleMilp {
    /// Fills the auxiliary columns of `x` from its primary columns.
    pub fn complete(&self, x: &mut [f64]) {
        self.robustifier.complete(x);
    }
}

fn expect(sp: &ScheduleProblem, ok: bool, expected: &'static str) -> Result<(), BuildError> {
    if ok {
        Ok(())
    } else {
        Err(BuildError::Mode { expected, got: sp.mode.name() })
    }
}

/// Problem with affine feedback on the regulation signal and the joint error.
pub fn build_level1(sp: &ScheduleProblem) -> Result<ScheduleMilp, BuildError> {
    expect(sp, sp.mode == Mode::Affine, "robust-affine")?;
    build(sp)
}

/// The same problem with no feedback; accepts an affine-mode problem too.
pub fn build_openloop_level1(sp: &ScheduleProblem) -> Result<ScheduleMilp, BuildError> {
    expect(sp, matches!(sp.mode, Mode::Affine | Mode::OpenLoop), "robust-openloop")?;
    build(&sp.with_mode(Mode::OpenLoop)?)
}

pub fn build_level2(sp: &ScheduleProblem) -> Result<ScheduleMilp, BuildError> {
    expect(sp, matches!(sp.mode, Mode::Level2 { .. }), "level2")?;
    build(sp)
}

pub fn build_omniscient(sp: &ScheduleProblem) -> Result<ScheduleMilp, BuildError> {
    expect(sp, matches!(sp.mode, Mode::Omniscient(_)), "omniscient")?;
    build(sp)
}

pub fn build(sp: &ScheduleProblem) -> Result<ScheduleMilp, BuildError> {
    sp.validate()?;
    let p = &sp.params;
    let s = &sp.sets;
    let n = sp.horizon();
    let bt = sp.model.b_tilde;
    let ab = p.cop * bt;
    let offset = sp.offset();
    let feedback = matches!(sp.mode, Mode::Affine | Mode::Level2 { .. });
    let memory = sp.options.policy_memory.unwrap_or(n).min(n.saturating_sub(1));

    let mut lp = LinearProgram::new();
    let mut layout = Layout {
        n,
        offset,
        u0: Vec::with_capacity(n),
        r: Vec::with_capacity(n),
        z: Vec::with_capacity(n),
        zt: Vec::with_capacity(n),
        eps: Vec::with_capacity(n),
        dw: Vec::new(),
        dd: Vec::new(),
        primary_columns: 0,
    };
    let block = p.hp_block_steps.max(1);
    for k in 0..n {
        layout.u0.push(lp.add_var(0.0, p.u_max, p.cost_el));
        match &sp.mode {
            Mode::Level2 { reserves, .. } => {
                layout.r.push(lp.add_var(reserves[k], reserves[k], 0.0));
                layout.zt.push(None);
            }
            _ => {
                layout.r.push(lp.add_var(0.0, p.r_max, -p.benefit_res));
                layout.zt.push(Some(lp.add_var(0.0, 1.0, 0.0)));
            }
        }
        let (zlo, zhi) = match &sp.mode {
            Mode::Level2 { reserves, prev_on: Some(on), .. } if k == 0 && offset % block != 0 && reserves[0] == 0.0 => {
                let v = if *on { 1.0 } else { 0.0 };
                (v, v)
            }
            _ => (0.0, 1.0),
        };
        layout.z.push(lp.add_var(zlo, zhi, 0.0));
        layout.eps.push(lp.add_var(0.0, f64::INFINITY, p.lambda));
    }
    if feedback {
        for (width, list) in [(s.wbar.width(), &mut layout.dw), (s.de.width(), &mut layout.dd)] {
            if width == 0.0 {
                continue;
            }
            for k in 1..n {
                for j in k.saturating_sub(memory)..k {
                    let pv = lp.add_var(0.0, f64::INFINITY, 0.0);
                    let qv = lp.add_var(0.0, f64::INFINITY, 0.0);
                    list.push(PolicyEntry { k, j, p: pv, q: qv });
                }
            }
        }
    }
    layout.primary_columns = lp.num_vars();

    // entries by row k and by column j
    let mut dw_row = vec![Vec::new(); n];
    let mut dd_row = vec![Vec::new(); n];
    let mut dw_col = vec![Vec::new(); n];
    let mut dd_col = vec![Vec::new(); n];
    for e in &layout.dw {
        dw_row[e.k].push(*e);
        dw_col[e.j].push(*e);
    }
    for e in &layout.dd {
        dd_row[e.k].push(*e);
        dd_col[e.j].push(*e);
    }

    // reserve flag rows
    for k in 0..n {
        if let Some(zt) = layout.zt[k] {
            lp.add_row([(layout.r[k], 1.0), (zt, -p.r_max)], Sense::Le, 0.0);
            lp.add_row([(layout.r[k], 1.0), (zt, -p.r_min)], Sense::Ge, 0.0);
            // implied by the capacity rows unless W is degenerate
            lp.add_row([(zt, 1.0), (layout.z[k], -1.0)], Sense::Le, 0.0);
        }
    }

    // capacity rows
    for k in 0..n {
        let (u0, r, z) = (layout.u0[k], layout.r[k], layout.z[k]);
        let (w_hi, w_lo) = match &sp.mode {
            Mode::Omniscient(rz) => (rz.wmax[k], rz.wmin[k]),
            _ => (s.w.hi, s.w.lo),
        };
        let mut upper = vec![(u0, 1.0), (r, w_hi), (z, -p.u_max)];
        let mut lower = vec![(u0, 1.0), (r, w_lo), (z, -p.u_min)];
        for (entries, set) in [(&dw_row[k], s.wbar), (&dd_row[k], s.de)] {
            for e in entries {
                upper.push((e.p, set.hi));
                upper.push((e.q, -set.lo));
                lower.push((e.p, set.lo));
                lower.push((e.q, -set.hi));
            }
        }
        lp.add_row(upper, Sense::Le, 0.0);
        lp.add_row(lower, Sense::Ge, 0.0);
    }

    // state rows
    let mut rob = Robustifier::new(sp.options.counterpart);
    let mut demand = 0.0;
    let mut nominal = Affine::default();
    for k in 0..n {
        demand += sp.forecast[k];
        nominal.push(layout.u0[k], ab);
        let mut terms = Vec::new();
        match &sp.mode {
            Mode::Omniscient(rz) => {
                nominal.push(layout.r[k], ab * rz.wbar[k]);
                nominal.constant += bt * rz.de[k];
            }
            _ => {
                for j in 0..=k {
                    let mut gw = Affine::var(layout.r[j], ab);
                    for e in dw_col[j].iter().filter(|e| e.k <= k) {
                        gw.push(e.p, ab);
                        gw.push(e.q, -ab);
                    }
                    terms.push(UncertainTerm { coeff: gw, bounds: s.wbar });
                    let mut gd = Affine::constant(bt);
                    for e in dd_col[j].iter().filter(|e| e.k <= k) {
                        gd.push(e.p, ab);
                        gd.push(e.q, -ab);
                    }
                    terms.push(UncertainTerm { coeff: gd, bounds: s.de });
                }
            }
        }
        let mut base = nominal.clone();
        base.constant += sp.x0 - bt * demand;
        let mut up = base.clone();
        up.push(layout.eps[k], -1.0);
        rob.add_le(&mut lp, &UncertainRow { nominal: up, uncertain: terms.clone(), rhs: p.x_max });
        let mut lo = base;
        lo.push(layout.eps[k], 1.0);
        rob.add_ge(&mut lp, &UncertainRow { nominal: lo, uncertain: terms, rhs: p.x_min });
    }

    if let Some(on) = sp.options.first_block_on {
        let v = if on { 1.0 } else { 0.0 };
        let first_end = ((offset / block + 1) * block - offset).min(n);
        for &j in &layout.z[..first_end] {
            if lp.lower[j] > v || lp.upper[j] < v {
                return Err(BuildError::Pinned(if on { "off" } else { "on" }));
            }
            lp.lower[j] = v;
            lp.upper[j] = v;
        }
    }

    let mut binaries = layout.z.clone();
    binaries.extend(layout.zt.iter().flatten());
    let mut problem = MilpProblem::new(lp, binaries);
    let mut k = 0;
    while k < n {
        let group_end = ((offset + k) / block + 1) * block - offset;
        let end = group_end.min(n);
        if end - k > 1 {
            problem.links.push(layout.z[k..end].to_vec());
        }
        k = end;
    }
    Ok(ScheduleMilp { problem, layout, robustifier: rob })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::validate_params;

    fn checked(n: usize) -> Checked {
        validate_params(SystemParams { horizon_steps: n, ..Default::default() }, UncertaintySets::default()).unwrap()
    }

    #[test]
    fn dimension_checks() {
        let c = checked(4);
        assert!(ScheduleProblem::new(&c, 30.0, vec![10.0; 3], Mode::Affine).is_err());
        let l2 = Mode::Level2 { kappa: 2, reserves: vec![0.0; 2], prev_on: None };
        assert!(ScheduleProblem::new(&c, 30.0, vec![10.0; 3], l2).is_err());
        let l2 = Mode::Level2 { kappa: 2, reserves: vec![0.0; 3], prev_on: None };
        assert!(ScheduleProblem::new(&c, 30.0, vec![10.0; 3], l2).is_ok());
        let om = Mode::Omniscient(Realization::zero(3));
        assert!(ScheduleProblem::new(&c, 30.0, vec![10.0; 4], om).is_err());
    }

    #[test]
    fn builders_reject_wrong_modes() {
        let sp = ScheduleProblem::new(&checked(4), 30.0, vec![10.0; 4], Mode::OpenLoop).unwrap();
        assert!(matches!(build_level1(&sp), Err(BuildError::Mode { .. })));
        assert!(build_openloop_level1(&sp).is_ok());
        assert!(build_level2(&sp).is_err());
        assert!(build_omniscient(&sp).is_err());
    }

    #[test]
    fn feedback_is_strictly_causal_and_banded() {
        let sp = ScheduleProblem::new(&checked(6), 30.0, vec![20.0; 6], Mode::Affine).unwrap();
        let full = build_level1(&sp).unwrap();
        assert_eq!(full.layout.dw.len(), 15);
        assert!(full.layout.dw.iter().chain(&full.layout.dd).all(|e| e.j < e.k));
        let sp2 = sp.clone().with_options(BuildOptions { policy_memory: Some(2), ..Default::default() });
        let banded = build_level1(&sp2).unwrap();
        assert_eq!(banded.layout.dw.len(), 1 + 2 * 4);
        assert!(banded.layout.dw.iter().all(|e| e.k - e.j <= 2));
    }

    #[test]
    fn on_off_links_follow_absolute_blocks() {
        let c = checked(6);
        let sp = ScheduleProblem::new(&c, 30.0, vec![20.0; 6], Mode::Affine).unwrap();
        let m = build_level1(&sp).unwrap();
        assert_eq!(m.problem.links.len(), 3);
        let l2 = Mode::Level2 { kappa: 2, reserves: vec![0.0; 5], prev_on: Some(true) };
        let sp = ScheduleProblem::new(&c, 30.0, vec![20.0; 5], l2).unwrap();
        let m = build_level2(&sp).unwrap();
        // step 0 finishes a running block and is pinned to the previous state
        assert_eq!(m.problem.links, vec![vec![m.layout.z[1], m.layout.z[2]], vec![m.layout.z[3], m.layout.z[4]]]);
        assert_eq!(m.problem.lp.lower[m.layout.z[0]], 1.0);
        assert!(m.layout.zt.iter().all(Option::is_none));
    }

    #[test]
    fn openloop_has_no_auxiliaries() {
        let sp = ScheduleProblem::new(&checked(8), 30.0, vec![20.0; 8], Mode::OpenLoop).unwrap();
        let m = build(&sp).unwrap();
        assert_eq!(m.robustifier.aux_count(), 0);
        assert_eq!(m.problem.lp.num_vars(), m.layout.primary_columns);
    }
}

//! Decoded schedules, robustness checks and realized costs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermoreg_opt::MilpSolution;
use thiserror::Error;

use super::schedule::{Layout, Mode, Realization, ScheduleProblem};
use crate::params::SystemParams;

const SNAP: f64 = 1e-9;
const TOL: f64 = 1e-6;
/// Vertex samples drawn by [`worst_case_check`] when full enumeration is too large.
pub const SAMPLED_VERTICES: usize = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("solution has no integer-feasible point")]
    NoSolution,
    #[error("policy invariant violated at step {index}: {what}")]
    Invariant { index: usize, what: &'static str },
}

/// A solved schedule with its feedback matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePolicy {
    /// kW electric per step.
    pub reserves: Vec<f64>,
    /// Nominal electric load u⁰ per step, kW.
    pub base: Vec<f64>,
    pub on: Vec<bool>,
    pub reserve_flag: Vec<bool>,
    /// `dw[k][j]`: kW per unit of interval-mean signal at step `j`.
    pub dw: Vec<Vec<f64>>,
    /// `dd[k][j]`: kW electric per kW of joint error at step `j`.
    pub dd: Vec<Vec<f64>>,
    /// Temperature-bound slack per step, °C.
    pub slack: Vec<f64>,
    pub objective: f64,
}

fn snap(v: f64) -> f64 {
    if v.abs() < SNAP {
        0.0
    } else {
        v
    }
}

fn invariant(index: usize, what: &'static str) -> PolicyError {
    PolicyError::Invariant { index, what }
}

pub fn extract_policy(sol: &MilpSolution, layout: &Layout) -> Result<AffinePolicy, PolicyError> {
    if !sol.status.has_solution() {
        return Err(PolicyError::NoSolution);
    }
    let x = &sol.x;
    let n = layout.n;
    let mut dw = vec![vec![0.0; n]; n];
    let mut dd = vec![vec![0.0; n]; n];
    for e in &layout.dw {
        dw[e.k][e.j] = snap(x[e.p] - x[e.q]);
    }
    for e in &layout.dd {
        dd[e.k][e.j] = snap(x[e.p] - x[e.q]);
    }
    let mut pol = AffinePolicy {
        reserves: layout.r.iter().map(|&j| snap(x[j].max(0.0))).collect(),
        base: layout.u0.iter().map(|&j| snap(x[j].max(0.0))).collect(),
        on: layout.z.iter().map(|&j| x[j] > 0.5).collect(),
        reserve_flag: Vec::with_capacity(n),
        dw,
        dd,
        slack: layout.eps.iter().map(|&j| snap(x[j])).collect(),
        objective: sol.objective,
    };
    for k in 0..n {
        let flag = match layout.zt[k] {
            Some(j) => x[j] > 0.5,
            None => pol.reserves[k] > 0.0,
        };
        pol.reserve_flag.push(flag);
        if pol.slack[k] < 0.0 {
            return Err(invariant(k, "slack >= 0"));
        }
        if !pol.on[k] {
            if pol.base[k] > TOL || pol.reserves[k] > TOL {
                return Err(invariant(k, "off step carries load or reserves"));
            }
            if pol.dw[k].iter().chain(&pol.dd[k]).any(|d| d.abs() > TOL) {
                return Err(invariant(k, "off step has nonzero feedback row"));
            }
            pol.base[k] = 0.0;
            pol.reserves[k] = 0.0;
            pol.dw[k].iter_mut().for_each(|d| *d = 0.0);
            pol.dd[k].iter_mut().for_each(|d| *d = 0.0);
        }
        if pol.reserves[k] > TOL && !flag {
            return Err(invariant(k, "reserves offered without reserve flag"));
        }
    }
    Ok(pol)
}

impl AffinePolicy {
    pub fn horizon(&self) -> usize {
        self.base.len()
    }

    pub fn total_reserves(&self) -> f64 {
        self.reserves.iter().sum()
    }

    /// Electric input at step `k` once disturbances up to `k − 1` are known.
    pub fn input(&self, k: usize, wbar: &[f64], de: &[f64]) -> f64 {
        let mut u = self.base[k];
        for j in 0..k {
            u += self.dw[k][j] * wbar[j] + self.dd[k][j] * de[j];
        }
        u
    }

    /// Checks the structural invariants against the parameter limits.
    pub fn check(&self, p: &SystemParams) -> Result<(), PolicyError> {
        let n = self.horizon();
        for k in 0..n {
            if self.dw[k][k..].iter().chain(&self.dd[k][k..]).any(|&d| d != 0.0) {
                return Err(invariant(k, "feedback not strictly lower triangular"));
            }
            let r = self.reserves[k];
            if r < 0.0 || (r > 0.0 && (r < p.r_min - TOL || r > p.r_max + TOL)) {
                return Err(invariant(k, "reserves outside {0} ∪ [R_min, R_max]"));
            }
            if self.slack[k] < 0.0 {
                return Err(invariant(k, "slack >= 0"));
            }
            if !self.on[k] && (self.base[k] != 0.0 || r != 0.0) {
                return Err(invariant(k, "off step carries load or reserves"));
            }
        }
        Ok(())
    }
}

/// Thermal and capacity violation of one disturbance draw beyond slack.
fn violation(pol: &AffinePolicy, sp: &ScheduleProblem, w: &[f64], wbar: &[f64], de: &[f64]) -> f64 {
    let p = &sp.params;
    let bt = sp.model.b_tilde;
    let mut x = sp.x0;
    let mut worst: f64 = 0.0;
    for k in 0..pol.horizon() {
        let u = pol.input(k, wbar, de);
        let z = if pol.on[k] { 1.0 } else { 0.0 };
        let c = u + w[k] * pol.reserves[k];
        worst = worst.max(z * p.u_min - c).max(c - z * p.u_max);
        x += bt * (p.cop * (u + wbar[k] * pol.reserves[k]) - sp.forecast[k] + de[k]);
        worst = worst.max(x - p.x_max - pol.slack[k]).max(p.x_min - pol.slack[k] - x);
    }
    worst
}

/// Largest constraint violation beyond slack over the uncertainty boxes:
/// every vertex for horizons up to 4, a seeded vertex sample otherwise.
pub fn worst_case_check(pol: &AffinePolicy, sp: &ScheduleProblem) -> f64 {
    let n = pol.horizon();
    let s = &sp.sets;
    let mut w = vec![0.0; n];
    let mut wbar = vec![0.0; n];
    let mut de = vec![0.0; n];
    let set = |bits: &mut dyn FnMut(usize) -> bool, w: &mut [f64], wbar: &mut [f64], de: &mut [f64]| {
        for k in 0..n {
            w[k] = if bits(3 * k) { s.w.hi } else { s.w.lo };
            wbar[k] = if bits(3 * k + 1) { s.wbar.hi } else { s.wbar.lo };
            de[k] = if bits(3 * k + 2) { s.de.hi } else { s.de.lo };
        }
    };
    let mut worst: f64 = 0.0;
    if n <= 4 {
        for v in 0u32..(1 << (3 * n)) {
            set(&mut |b| v >> b & 1 == 1, &mut w, &mut wbar, &mut de);
            worst = worst.max(violation(pol, sp, &w, &wbar, &de));
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..SAMPLED_VERTICES {
            set(&mut |_| rng.random_bool(0.5), &mut w, &mut wbar, &mut de);
            worst = worst.max(violation(pol, sp, &w, &wbar, &de));
        }
    }
    worst
}

/// What happens when a policy is played against one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Realized electric base load per step (policy feedback included).
    pub base: Vec<f64>,
    /// Average temperature after each step.
    pub temps: Vec<f64>,
    /// Realized bound violation per step.
    pub slack: Vec<f64>,
    pub cost: f64,
    /// Largest breach of the capacity limits over `[wmin, wmax]`.
    pub capacity_violation: f64,
}

pub fn realized_outcome(pol: &AffinePolicy, sp: &ScheduleProblem, rz: &Realization) -> Outcome {
    let p = &sp.params;
    let bt = sp.model.b_tilde;
    let n = pol.horizon();
    let mut out = Outcome { base: Vec::with_capacity(n), temps: Vec::with_capacity(n), slack: Vec::with_capacity(n), cost: 0.0, capacity_violation: 0.0 };
    let mut x = sp.x0;
    let reserve_benefit = match sp.mode {
        Mode::Level2 { .. } => 0.0,
        _ => p.benefit_res,
    };
    for k in 0..n {
        let u = pol.input(k, &rz.wbar, &rz.de);
        let r = pol.reserves[k];
        let z = if pol.on[k] { 1.0 } else { 0.0 };
        out.capacity_violation = out
            .capacity_violation
            .max(z * p.u_min - (u + rz.wmin[k] * r))
            .max(u + rz.wmax[k] * r - z * p.u_max);
        x += bt * (p.cop * (u + rz.wbar[k] * r) - sp.forecast[k] + rz.de[k]);
        let eps = (x - p.x_max).max(p.x_min - x).max(0.0);
        out.cost += p.cost_el * u - reserve_benefit * r + p.lambda * eps;
        out.base.push(u);
        out.temps.push(x);
        out.slack.push(eps);
    }
    out
}

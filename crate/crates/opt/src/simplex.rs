//! Bounded-variable revised simplex.
//!
//! Every row `aᵢ·x (sense) bᵢ` gets a slack `sᵢ` with `aᵢ·x + sᵢ = bᵢ`; the
//! slack bounds encode the sense. The basis inverse is stored explicitly and
//! updated by rank-one pivots, with a full reinversion every
//! [`SimplexOptions::refactor_every`] pivots.
//!
//! A dual simplex runs whenever the starting basis is dual feasible (the
//! usual case for a branch-and-bound child, and for the slack basis of
//! problems whose costs push variables onto finite bounds); otherwise a
//! two-phase primal simplex is used.

use std::time::{Duration, Instant};

use crate::factor;
use crate::lp::{LinearProgram, LpError, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, Copy)]
pub struct LpLimits {
    pub max_iterations: usize,
    pub time_limit: Option<Duration>,
}

impl Default for LpLimits {
    fn default() -> Self {
        LpLimits { max_iterations: 200_000, time_limit: None }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub pivot_tol: f64,
    pub refactor_every: usize,
    /// Number of consecutive degenerate pivots after which Bland's rule is used.
    pub bland_after: usize,
    /// Relative size of the cost shifts applied before a dual simplex run
    /// (0 disables them). They are removed before the final primal pass.
    pub cost_perturbation: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feas_tol: 1e-7,
            opt_tol: 1e-7,
            pivot_tol: 1e-9,
            refactor_every: 50,
            bland_after: 50,
            cost_perturbation: 1e-6,
        }
    }
}

/// A simplex basis over structural and slack variables, usable as a warm
/// start for a problem with the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    /// Variable in each basis position; `n + i` is the slack of row `i`.
    pub head: Vec<usize>,
    /// For every variable (structural then slack): nonbasic at its upper bound.
    pub at_upper: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Row multipliers `y = c_Bᵀ B⁻¹` of the final basis.
    pub duals: Vec<f64>,
    pub basis: Option<Basis>,
}

pub fn solve_lp(lp: &LinearProgram, limits: &LpLimits) -> Result<LpSolution, LpError> {
    solve_lp_warm(lp, limits, &SimplexOptions::default(), None)
}

pub fn solve_lp_warm(
    lp: &LinearProgram,
    limits: &LpLimits,
    opts: &SimplexOptions,
    warm: Option<&Basis>,
) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let mut s = Simplex::new(lp, *opts, *limits, warm);
    let status = s.run();
    Ok(s.into_solution(lp, status))
}

/// Lagrangian lower bound `yᵀb + Σⱼ min_{lⱼ≤xⱼ≤uⱼ} (cⱼ − yᵀAⱼ) xⱼ`.
///
/// Multipliers with the wrong sign for their row sense are projected to zero
/// first, so the result is a valid bound for any `y`. Returns `-∞` if some
/// reduced cost points toward an infinite bound.
pub fn dual_bound(lp: &LinearProgram, y: &[f64]) -> f64 {
    let y: Vec<f64> = lp
        .rows
        .iter()
        .zip(y)
        .map(|(row, &yi)| match row.sense {
            Sense::Le => yi.min(0.0),
            Sense::Ge => yi.max(0.0),
            Sense::Eq => yi,
        })
        .collect();
    let mut reduced = lp.objective.clone();
    let mut bound = 0.0;
    for (row, &yi) in lp.rows.iter().zip(&y) {
        bound += yi * row.rhs;
        for &(j, v) in &row.coeffs {
            reduced[j] -= yi * v;
        }
    }
    for j in 0..lp.num_vars() {
        let d = reduced[j];
        if d > 0.0 {
            if lp.lower[j] == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            bound += d * lp.lower[j];
        } else if d < 0.0 {
            if lp.upper[j] == f64::INFINITY {
                return f64::NEG_INFINITY;
            }
            bound += d * lp.upper[j];
        }
    }
    bound
}

const NONBASIC: usize = usize::MAX;

struct Simplex {
    opts: SimplexOptions,
    limits: LpLimits,
    start: Instant,
    m: usize,
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    b: Vec<f64>,
    head: Vec<usize>,
    pos: Vec<usize>,
    at_upper: Vec<bool>,
    x: Vec<f64>,
    binv: Vec<f64>,
    d: Vec<f64>,
    since_refactor: usize,
    iterations: usize,
    degenerate_streak: usize,
}

enum Step {
    Continue,
    Done(LpStatus),
}

impl Simplex {
    fn new(lp: &LinearProgram, opts: SimplexOptions, limits: LpLimits, warm: Option<&Basis>) -> Self {
        let m = lp.num_rows();
        let n = lp.num_vars();
        let mut cost = lp.objective.clone();
        cost.resize(n + m, 0.0);
        let mut lb = lp.lower.clone();
        let mut ub = lp.upper.clone();
        for row in &lp.rows {
            let (lo, hi) = match row.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lb.push(lo);
            ub.push(hi);
        }
        let b = lp.rows.iter().map(|r| r.rhs).collect();

        let warm = warm.filter(|w| valid_warm(w, n, m));
        let (head, at_upper) = match warm {
            Some(w) => (w.head.clone(), w.at_upper.clone()),
            None => ((n..n + m).collect(), vec![false; n + m]),
        };
        let mut pos = vec![NONBASIC; n + m];
        for (p, &j) in head.iter().enumerate() {
            pos[j] = p;
        }
        let mut s = Simplex {
            opts,
            limits,
            start: Instant::now(),
            m,
            n,
            cols: lp.columns(),
            cost,
            lb,
            ub,
            b,
            head,
            pos,
            at_upper,
            x: vec![0.0; n + m],
            binv: Vec::new(),
            d: vec![0.0; n + m],
            since_refactor: 0,
            iterations: 0,
            degenerate_streak: 0,
        };
        for j in 0..n + m {
            if s.pos[j] == NONBASIC {
                s.x[j] = s.nonbasic_value(j);
            }
        }
        s
    }

    fn nonbasic_value(&mut self, j: usize) -> f64 {
        let (lo, hi) = (self.lb[j], self.ub[j]);
        if self.at_upper[j] && hi.is_finite() {
            hi
        } else if lo.is_finite() {
            self.at_upper[j] = false;
            lo
        } else if hi.is_finite() {
            self.at_upper[j] = true;
            hi
        } else {
            self.at_upper[j] = false;
            0.0
        }
    }

    fn col_entries(&self, j: usize) -> ColIter<'_> {
        if j < self.n {
            ColIter::Sparse(self.cols[j].iter())
        } else {
            ColIter::Unit(Some(j - self.n))
        }
    }

    fn refactor(&mut self) {
        loop {
            match factor::invert(self.m, self.n, &self.cols, &self.head, &mut self.binv) {
                Ok(()) => break,
                Err(sing) => {
                    for (p, row) in sing.positions.into_iter().zip(sing.free_rows) {
                        let leaving = self.head[p];
                        let slack = self.n + row;
                        self.pos[leaving] = NONBASIC;
                        self.x[leaving] = self.nonbasic_value(leaving);
                        self.head[p] = slack;
                        self.pos[slack] = p;
                    }
                }
            }
        }
        self.since_refactor = 0;
        self.recompute_basic_values();
    }

    fn recompute_basic_values(&mut self) {
        let m = self.m;
        let mut rhs = self.b.clone();
        for j in 0..self.n + m {
            if self.pos[j] != NONBASIC {
                continue;
            }
            let xj = self.x[j];
            if xj == 0.0 {
                continue;
            }
            for (i, v) in self.col_entries(j) {
                rhs[i] -= v * xj;
            }
        }
        for p in 0..m {
            let row = &self.binv[p * m..(p + 1) * m];
            let val: f64 = row.iter().zip(&rhs).map(|(a, b)| a * b).sum();
            self.x[self.head[p]] = val;
        }
    }

    /// `y = c_Bᵀ B⁻¹` for the given per-position costs.
    fn duals_for(&self, cb: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (p, &c) in cb.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let row = &self.binv[p * m..(p + 1) * m];
            for (yi, r) in y.iter_mut().zip(row) {
                *yi += c * r;
            }
        }
        y
    }

    fn phase2_cb(&self) -> Vec<f64> {
        self.head.iter().map(|&j| self.cost[j]).collect()
    }

    /// Reduced costs of all nonbasic variables for costs `cost` (basic ones are 0).
    fn reduced_costs(&mut self, y: &[f64], phase1: bool) {
        for j in 0..self.n + self.m {
            if self.pos[j] != NONBASIC {
                self.d[j] = 0.0;
                continue;
            }
            let c = if phase1 { 0.0 } else { self.cost[j] };
            let ya: f64 = self.col_entries(j).map(|(i, v)| y[i] * v).sum();
            self.d[j] = c - ya;
        }
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        for (k, v) in self.col_entries(j) {
            for (p, a) in alpha.iter_mut().enumerate() {
                let bk = self.binv[p * m + k];
                if bk != 0.0 {
                    *a += bk * v;
                }
            }
        }
        alpha
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        let inv = 1.0 / piv;
        for v in &mut self.binv[r * m..(r + 1) * m] {
            *v *= inv;
        }
        let pivot_row: Vec<(usize, f64)> = self.binv[r * m..(r + 1) * m]
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(k, v)| (k, *v))
            .collect();
        for (p, &a) in alpha.iter().enumerate() {
            if p == r || a == 0.0 {
                continue;
            }
            let row = &mut self.binv[p * m..(p + 1) * m];
            for &(k, v) in &pivot_row {
                row[k] -= a * v;
            }
        }
        let leaving = self.head[r];
        self.pos[leaving] = NONBASIC;
        self.head[r] = q;
        self.pos[q] = r;
        self.since_refactor += 1;
    }

    fn limits_hit(&self) -> bool {
        if self.iterations >= self.limits.max_iterations {
            return true;
        }
        match self.limits.time_limit {
            Some(t) => self.start.elapsed() >= t,
            None => false,
        }
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lb[j] == self.ub[j]
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lb[j] - self.opts.feas_tol {
            self.lb[j] - v
        } else if v > self.ub[j] + self.opts.feas_tol {
            v - self.ub[j]
        } else {
            0.0
        }
    }

    fn run(&mut self) -> LpStatus {
        self.refactor();
        if self.m == 0 {
            return self.solve_unconstrained();
        }
        let y = self.duals_for(&self.phase2_cb());
        self.reduced_costs(&y, false);
        let mut dual_feasible = true;
        let mut flipped = false;
        for j in 0..self.n + self.m {
            if self.pos[j] != NONBASIC || self.is_fixed(j) {
                continue;
            }
            let dj = self.d[j];
            let tol = self.opts.opt_tol;
            if dj < -tol && !(self.at_upper[j] && self.ub[j].is_finite()) {
                if self.ub[j].is_finite() {
                    self.at_upper[j] = true;
                    self.x[j] = self.ub[j];
                    flipped = true;
                } else {
                    dual_feasible = false;
                }
            } else if dj > tol && !(!self.at_upper[j] && self.lb[j].is_finite()) {
                if self.lb[j].is_finite() {
                    self.at_upper[j] = false;
                    self.x[j] = self.lb[j];
                    flipped = true;
                } else {
                    dual_feasible = false;
                }
            }
        }
        if flipped {
            self.recompute_basic_values();
        }
        if dual_feasible {
            let original = self.perturb_costs();
            let status = self.dual();
            self.cost = original;
            match status {
                LpStatus::Optimal => {}
                other => return other,
            }
        }
        self.primal()
    }

    /// Shifts the cost of every nonbasic column by a small deterministic
    /// amount in its dual-feasible direction, breaking the ties between the
    /// many zero reduced costs that otherwise stall the dual simplex.
    /// Returns the unperturbed costs.
    fn perturb_costs(&mut self) -> Vec<f64> {
        let original = self.cost.clone();
        let scale = self.opts.cost_perturbation;
        if scale > 0.0 {
            for j in 0..self.n + self.m {
                if self.pos[j] != NONBASIC || self.is_fixed(j) {
                    continue;
                }
                let free = self.lb[j] == f64::NEG_INFINITY && self.ub[j] == f64::INFINITY;
                if free {
                    continue;
                }
                let delta = scale * (1.0 + original[j].abs()) * (1.0 + unit_hash(j as u64));
                let sign = if self.at_upper[j] { -1.0 } else { 1.0 };
                self.cost[j] += sign * delta;
                self.d[j] += sign * delta;
            }
        }
        original
    }

    fn solve_unconstrained(&mut self) -> LpStatus {
        for j in 0..self.n {
            let c = self.cost[j];
            if c > 0.0 {
                if self.lb[j] == f64::NEG_INFINITY {
                    return LpStatus::Unbounded;
                }
                self.x[j] = self.lb[j];
                self.at_upper[j] = false;
            } else if c < 0.0 {
                if self.ub[j] == f64::INFINITY {
                    return LpStatus::Unbounded;
                }
                self.x[j] = self.ub[j];
                self.at_upper[j] = true;
            }
        }
        LpStatus::Optimal
    }

    fn dual(&mut self) -> LpStatus {
        let mut rechecked_infeasible = false;
        loop {
            if self.limits_hit() {
                return LpStatus::IterationLimit;
            }
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor();
                let y = self.duals_for(&self.phase2_cb());
                self.reduced_costs(&y, false);
            }
            match self.dual_iteration() {
                Step::Continue => {}
                Step::Done(LpStatus::Infeasible) if !rechecked_infeasible => {
                    rechecked_infeasible = true;
                    self.refactor();
                    let y = self.duals_for(&self.phase2_cb());
                    self.reduced_costs(&y, false);
                }
                Step::Done(status) => return status,
            }
        }
    }

    fn dual_iteration(&mut self) -> Step {
        let m = self.m;
        let bland = self.degenerate_streak >= self.opts.bland_after;
        // leaving row
        let mut r = NONBASIC;
        let mut best = 0.0;
        for p in 0..m {
            let inf = self.infeasibility(self.head[p]);
            if inf <= 0.0 {
                continue;
            }
            let better = if bland {
                r == NONBASIC || self.head[p] < self.head[r]
            } else {
                inf > best || (inf == best && self.head[p] < self.head[r])
            };
            if better {
                best = inf;
                r = p;
            }
        }
        if r == NONBASIC {
            return Step::Done(LpStatus::Optimal);
        }
        let leaving = self.head[r];
        let to_lower = self.x[leaving] < self.lb[leaving];
        let target = if to_lower { self.lb[leaving] } else { self.ub[leaving] };
        let rho: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();

        // Entering column: x_r changes by −α_rj Δx_j. For to_lower we need an
        // increase of x_r, otherwise a decrease.
        let want_sign = if to_lower { -1.0 } else { 1.0 };
        let mut cand: Vec<(usize, f64, f64)> = Vec::new();
        for j in 0..self.n + m {
            if self.pos[j] != NONBASIC || self.is_fixed(j) {
                continue;
            }
            let a: f64 = self.col_entries(j).map(|(i, v)| rho[i] * v).sum();
            if a.abs() <= self.opts.pivot_tol {
                continue;
            }
            let free = self.lb[j] == f64::NEG_INFINITY && self.ub[j] == f64::INFINITY;
            // direction of Δx_j that is allowed
            let move_dir = if free {
                if a * want_sign > 0.0 {
                    1.0
                } else {
                    -1.0
                }
            } else if self.at_upper[j] {
                -1.0
            } else {
                1.0
            };
            if a * move_dir * want_sign <= 0.0 {
                continue;
            }
            // |d_j| measured in the dual-feasible direction
            let dj = if free { self.d[j].abs() } else { (self.d[j] * move_dir).max(0.0) };
            cand.push((j, a, dj));
        }
        if cand.is_empty() {
            return Step::Done(LpStatus::Infeasible);
        }
        let q = if bland {
            let min_ratio = cand.iter().map(|&(_, a, dj)| dj / a.abs()).fold(f64::INFINITY, f64::min);
            cand.iter()
                .filter(|&&(_, a, dj)| dj / a.abs() <= min_ratio)
                .map(|&(j, _, _)| j)
                .min()
                .unwrap()
        } else {
            let tol = self.opts.opt_tol;
            let theta_max = cand.iter().map(|&(_, a, dj)| (dj + tol) / a.abs()).fold(f64::INFINITY, f64::min);
            let mut q = NONBASIC;
            let mut q_abs = 0.0;
            for &(j, a, dj) in &cand {
                if dj / a.abs() <= theta_max && (a.abs() > q_abs || (a.abs() == q_abs && j < q)) {
                    q = j;
                    q_abs = a.abs();
                }
            }
            q
        };
        let alpha = self.ftran(q);
        let alpha_rq: f64 = self.col_entries(q).map(|(i, v)| rho[i] * v).sum();
        if (alpha[r] - alpha_rq).abs() > 1e-7 * (1.0 + alpha_rq.abs()) && self.since_refactor > 0 {
            self.refactor();
            let y = self.duals_for(&self.phase2_cb());
            self.reduced_costs(&y, false);
            return Step::Continue;
        }
        let theta_d = self.d[q] / alpha[r];
        // update reduced costs: d_j -= θ α_rj
        for j in 0..self.n + m {
            if self.pos[j] != NONBASIC || j == q {
                continue;
            }
            let a: f64 = self.col_entries(j).map(|(i, v)| rho[i] * v).sum();
            if a != 0.0 {
                self.d[j] -= theta_d * a;
            }
        }
        self.d[q] = 0.0;
        self.d[leaving] = -theta_d;

        let delta = (self.x[leaving] - target) / alpha[r];
        for p in 0..m {
            let j = self.head[p];
            self.x[j] -= delta * alpha[p];
        }
        self.x[q] += delta;
        self.x[leaving] = target;
        self.at_upper[leaving] = !to_lower;
        self.pivot(r, q, &alpha);
        self.iterations += 1;
        if theta_d.abs() < 1e-12 {
            self.degenerate_streak += 1;
        } else {
            self.degenerate_streak = 0;
        }
        Step::Continue
    }

    fn primal(&mut self) -> LpStatus {
        loop {
            if self.limits_hit() {
                return LpStatus::IterationLimit;
            }
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor();
            }
            if let Step::Done(status) = self.primal_iteration() {
                return status;
            }
        }
    }

    fn primal_iteration(&mut self) -> Step {
        let m = self.m;
        let tol = self.opts.feas_tol;
        let mut phase1 = false;
        let cb: Vec<f64> = self
            .head
            .iter()
            .map(|&j| {
                if self.x[j] < self.lb[j] - tol {
                    phase1 = true;
                    -1.0
                } else if self.x[j] > self.ub[j] + tol {
                    phase1 = true;
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let cb = if phase1 { cb } else { self.phase2_cb() };
        let y = self.duals_for(&cb);
        self.reduced_costs(&y, phase1);

        let bland = self.degenerate_streak >= self.opts.bland_after;
        let mut q = NONBASIC;
        let mut q_score = 0.0;
        let mut q_dir = 0.0;
        for j in 0..self.n + m {
            if self.pos[j] != NONBASIC || self.is_fixed(j) {
                continue;
            }
            let dj = self.d[j];
            let free = self.lb[j] == f64::NEG_INFINITY && self.ub[j] == f64::INFINITY;
            let (score, dir) = if free {
                (dj.abs(), if dj < 0.0 { 1.0 } else { -1.0 })
            } else if self.at_upper[j] {
                (dj, -1.0)
            } else {
                (-dj, 1.0)
            };
            if score <= self.opts.opt_tol {
                continue;
            }
            if bland {
                q = j;
                q_dir = dir;
                break;
            }
            if score > q_score {
                q = j;
                q_score = score;
                q_dir = dir;
            }
        }
        if q == NONBASIC {
            return Step::Done(if phase1 { LpStatus::Infeasible } else { LpStatus::Optimal });
        }

        let alpha = self.ftran(q);
        // ratio test; basic j moves at rate −dir·α_p
        let piv_tol = self.opts.pivot_tol;
        let mut entries: Vec<(usize, f64, f64, bool)> = Vec::new(); // (p, exact, relaxed, to_upper)
        for p in 0..m {
            let rate = -q_dir * alpha[p];
            if rate.abs() <= piv_tol {
                continue;
            }
            let j = self.head[p];
            let v = self.x[j];
            let (lo, hi) = (self.lb[j], self.ub[j]);
            if rate > 0.0 {
                if v < lo - tol {
                    entries.push((p, (lo - v) / rate, (lo + tol - v) / rate, false));
                } else if v > hi + tol {
                    // moving further away; phase-1 cost already accounts for it
                } else if hi.is_finite() {
                    entries.push((p, ((hi - v) / rate).max(0.0), (hi + tol - v) / rate, true));
                }
            } else if v > hi + tol {
                entries.push((p, (v - hi) / -rate, (v - hi + tol) / -rate, true));
            } else if v < lo - tol {
            } else if lo.is_finite() {
                entries.push((p, ((v - lo) / -rate).max(0.0), (v - lo + tol) / -rate, false));
            }
        }
        let range = self.ub[q] - self.lb[q];
        let leave = if entries.is_empty() {
            None
        } else if bland {
            let min = entries.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
            entries
                .iter()
                .filter(|e| e.1 <= min)
                .min_by_key(|e| self.head[e.0])
                .copied()
        } else {
            let theta_max = entries.iter().map(|e| e.2).fold(f64::INFINITY, f64::min);
            let mut best: Option<(usize, f64, f64, bool)> = None;
            for &e in &entries {
                if e.1 > theta_max {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some(b) => {
                        let (ae, ab) = (alpha[e.0].abs(), alpha[b.0].abs());
                        ae > ab || (ae == ab && self.head[e.0] < self.head[b.0])
                    }
                };
                if better {
                    best = Some(e);
                }
            }
            best
        };
        let theta = leave.map(|e| e.1).unwrap_or(f64::INFINITY);
        if range.is_finite() && range <= theta {
            // bound flip
            let delta = q_dir * range;
            for p in 0..m {
                let j = self.head[p];
                self.x[j] -= delta * alpha[p];
            }
            self.at_upper[q] = q_dir > 0.0;
            self.x[q] = if self.at_upper[q] { self.ub[q] } else { self.lb[q] };
            self.iterations += 1;
            self.degenerate_streak = 0;
            return Step::Continue;
        }
        let Some((r, theta, _, to_upper)) = leave else {
            if phase1 {
                // Cannot happen in exact arithmetic; rebuild and retry.
                self.refactor();
                return Step::Continue;
            }
            return Step::Done(LpStatus::Unbounded);
        };
        let delta = q_dir * theta;
        for p in 0..m {
            let j = self.head[p];
            self.x[j] -= delta * alpha[p];
        }
        self.x[q] += delta;
        let leaving = self.head[r];
        self.x[leaving] = if to_upper { self.ub[leaving] } else { self.lb[leaving] };
        self.at_upper[leaving] = to_upper;
        self.pivot(r, q, &alpha);
        self.iterations += 1;
        if theta < 1e-12 {
            self.degenerate_streak += 1;
        } else {
            self.degenerate_streak = 0;
        }
        Step::Continue
    }

    fn into_solution(self, lp: &LinearProgram, status: LpStatus) -> LpSolution {
        let x: Vec<f64> = self.x[..self.n].to_vec();
        let objective = lp.objective_value(&x);
        let duals = if self.m > 0 { self.duals_for(&self.phase2_cb()) } else { Vec::new() };
        let basis = Some(Basis { head: self.head.clone(), at_upper: self.at_upper.clone() });
        LpSolution { status, x, objective, iterations: self.iterations, duals, basis }
    }
}

/// Deterministic value in `[0, 1)` (splitmix64 finalizer).
fn unit_hash(mut z: u64) -> f64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

fn valid_warm(w: &Basis, n: usize, m: usize) -> bool {
    if w.head.len() != m || w.at_upper.len() != n + m {
        return false;
    }
    let mut seen = vec![false; n + m];
    for &j in &w.head {
        if j >= n + m || seen[j] {
            return false;
        }
        seen[j] = true;
    }
    true
}

enum ColIter<'a> {
    Sparse(std::slice::Iter<'a, (usize, f64)>),
    Unit(Option<usize>),
}

impl Iterator for ColIter<'_> {
    type Item = (usize, f64);
    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            ColIter::Sparse(it) => it.next().copied(),
            ColIter::Unit(slot) => slot.take().map(|i| (i, 1.0)),
        }
    }
}

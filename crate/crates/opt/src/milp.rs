//! Best-first branch and bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::lp::{LinearProgram, LpError, Row};
use crate::simplex::{solve_lp_warm, Basis, LpLimits, LpSolution, LpStatus, SimplexOptions};

pub const INTEGRALITY_TOL: f64 = 1e-6;
/// Largest binary count [`brute_force_milp`] accepts.
pub const BRUTE_FORCE_CAP: usize = 16;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("binary index {0} out of range")]
    BinaryOutOfRange(usize),
    #[error("linked variable {0} is not declared binary")]
    LinkNotBinary(usize),
    #[error("variable {0} appears in more than one link group")]
    LinkOverlap(usize),
    #[error("{count} binaries exceed the enumeration cap of {cap}")]
    TooManyBinaries { count: usize, cap: usize },
    #[error("initial incumbent rejected: {0}")]
    BadIncumbent(String),
}

/// A linear program in which some columns must take values in {0, 1}.
///
/// Each group in `links` is a set of binaries forced to share one value;
/// the solver substitutes a single representative column for the group.
#[derive(Debug, Clone, Default)]
pub struct MilpProblem {
    pub lp: LinearProgram,
    pub binaries: Vec<usize>,
    pub links: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    FeasibleAtLimit,
    Infeasible,
    /// A node or time cap was reached before any integer solution was found.
    NoSolutionAtLimit,
}

impl MilpStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, MilpStatus::Optimal | MilpStatus::FeasibleAtLimit)
    }
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Global lower bound on the optimum.
    pub bound: f64,
    pub nodes: usize,
    /// Global bound after each explored node; nondecreasing.
    pub bound_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct MilpLimits {
    pub max_nodes: usize,
    pub time_limit: Option<Duration>,
    pub lp: LpLimits,
    /// Run the LP-rounding heuristic every this many nodes (0 = root only).
    pub rounding_every: usize,
    /// Run the diving heuristic every this many nodes (0 = root only).
    pub dive_every: usize,
}

impl Default for MilpLimits {
    fn default() -> Self {
        MilpLimits { max_nodes: 100_000, time_limit: None, lp: LpLimits::default(), rounding_every: 50, dive_every: 200 }
    }
}

impl MilpProblem {
    pub fn new(lp: LinearProgram, binaries: Vec<usize>) -> Self {
        MilpProblem { lp, binaries, links: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), MilpError> {
        self.lp.validate()?;
        let n = self.lp.num_vars();
        let mut is_bin = vec![false; n];
        for &j in &self.binaries {
            if j >= n {
                return Err(MilpError::BinaryOutOfRange(j));
            }
            is_bin[j] = true;
        }
        let mut linked = vec![false; n];
        for group in &self.links {
            for &j in group {
                if j >= n || !is_bin[j] {
                    return Err(MilpError::LinkNotBinary(j));
                }
                if linked[j] {
                    return Err(MilpError::LinkOverlap(j));
                }
                linked[j] = true;
            }
        }
        Ok(())
    }
}

/// The problem after substituting one representative per link group.
struct Reduced {
    lp: LinearProgram,
    binaries: Vec<usize>,
    /// Original column → reduced column.
    map: Vec<usize>,
}

impl Reduced {
    fn new(p: &MilpProblem) -> Self {
        let n = p.lp.num_vars();
        let mut rep: Vec<usize> = (0..n).collect();
        for group in &p.links {
            if let Some(&first) = group.iter().min() {
                for &j in group {
                    rep[j] = first;
                }
            }
        }
        let mut map = vec![usize::MAX; n];
        let mut lp = LinearProgram::new();
        for j in 0..n {
            if rep[j] == j {
                map[j] = lp.add_var(p.lp.lower[j], p.lp.upper[j], 0.0);
            }
        }
        for j in 0..n {
            let r = map[rep[j]];
            map[j] = r;
            lp.objective[r] += p.lp.objective[j];
            lp.lower[r] = lp.lower[r].max(p.lp.lower[j]);
            lp.upper[r] = lp.upper[r].min(p.lp.upper[j]);
        }
        for row in &p.lp.rows {
            lp.rows.push(Row::new(row.coeffs.iter().map(|&(j, v)| (map[j], v)), row.sense, row.rhs));
        }
        let mut binaries: Vec<usize> = p.binaries.iter().map(|&j| map[j]).collect();
        binaries.sort_unstable();
        binaries.dedup();
        Reduced { lp, binaries, map }
    }

    fn expand(&self, xr: &[f64], binaries: &[usize]) -> Vec<f64> {
        let mut x: Vec<f64> = self.map.iter().map(|&r| xr[r]).collect();
        for &j in binaries {
            x[j] = x[j].round().clamp(0.0, 1.0);
        }
        x
    }

    fn compress(&self, x: &[f64]) -> Vec<f64> {
        let mut xr = vec![0.0; self.lp.num_vars()];
        for (j, &r) in self.map.iter().enumerate() {
            xr[r] = x[j];
        }
        xr
    }
}

struct Node {
    bound: f64,
    depth: usize,
    id: usize,
    fixes: Vec<(usize, f64)>,
    basis: Option<Basis>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: the "greatest" node is the one explored next.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

fn most_fractional(x: &[f64], binaries: &[usize]) -> Option<usize> {
    let mut best = None;
    let mut best_frac = INTEGRALITY_TOL;
    for &j in binaries {
        let frac = (x[j] - x[j].round()).abs();
        if frac > best_frac {
            best_frac = frac;
            best = Some(j);
        }
    }
    best
}

fn set_binary_bounds(lp: &mut LinearProgram, orig: &LinearProgram, binaries: &[usize], fixes: &[(usize, f64)]) {
    for &j in binaries {
        lp.lower[j] = orig.lower[j];
        lp.upper[j] = orig.upper[j];
    }
    for &(j, v) in fixes {
        lp.lower[j] = v;
        lp.upper[j] = v;
    }
}

/// Solves `p` to optimality or until a cap is hit, returning the best
/// integer solution found together with a global bound.
pub fn solve_milp(p: &MilpProblem, limits: &MilpLimits) -> Result<MilpSolution, MilpError> {
    solve_milp_with_incumbent(p, limits, None)
}

/// As [`solve_milp`], seeded with a known feasible point.
pub fn solve_milp_with_incumbent(
    p: &MilpProblem,
    limits: &MilpLimits,
    incumbent: Option<&[f64]>,
) -> Result<MilpSolution, MilpError> {
    p.validate()?;
    let start = Instant::now();
    let red = Reduced::new(p);
    let opts = SimplexOptions::default();
    let mut work = red.lp.clone();

    let mut best: Option<(f64, Vec<f64>)> = None;
    if let Some(x0) = incumbent {
        if x0.len() != p.lp.num_vars() {
            return Err(MilpError::BadIncumbent("length mismatch".into()));
        }
        for &j in &p.binaries {
            if (x0[j] - x0[j].round()).abs() > INTEGRALITY_TOL {
                return Err(MilpError::BadIncumbent(format!("binary {j} = {}", x0[j])));
            }
        }
        for group in &p.links {
            if group.iter().any(|&j| (x0[j] - x0[group[0]]).abs() > INTEGRALITY_TOL) {
                return Err(MilpError::BadIncumbent("link group not constant".into()));
            }
        }
        let viol = p.lp.max_violation(x0);
        if viol > 1e-6 {
            return Err(MilpError::BadIncumbent(format!("violation {viol:e}")));
        }
        best = Some((p.lp.objective_value(x0), red.compress(x0)));
    }

    let time_up = |start: &Instant| limits.time_limit.is_some_and(|t| start.elapsed() >= t);
    let mut heap = BinaryHeap::new();
    heap.push(Node { bound: f64::NEG_INFINITY, depth: 0, id: 0, fixes: Vec::new(), basis: None });
    let mut next_id = 1;
    let mut nodes = 0;
    let mut global = f64::NEG_INFINITY;
    let mut history = Vec::new();
    let mut hit_limit = false;

    while let Some(node) = heap.pop() {
        if let Some((inc, _)) = &best {
            if node.bound >= inc - prune_tol(*inc) {
                continue;
            }
        }
        if nodes >= limits.max_nodes || time_up(&start) {
            heap.push(node);
            hit_limit = true;
            break;
        }
        global = global.max(node.bound);
        nodes += 1;

        set_binary_bounds(&mut work, &red.lp, &red.binaries, &node.fixes);
        let sol = solve_lp_warm(&work, &limits.lp, &opts, node.basis.as_ref())?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                history.push(global);
                continue;
            }
            LpStatus::Unbounded => {
                // An unbounded relaxation with bounded binaries means the
                // continuous part is unbounded; no finite optimum exists.
                history.push(global);
                continue;
            }
            LpStatus::IterationLimit => {
                hit_limit = true;
                heap.push(node);
                break;
            }
        }
        let node_bound = sol.objective.max(node.bound);
        if let Some((inc, _)) = &best {
            if node_bound >= inc - prune_tol(*inc) {
                history.push(global);
                continue;
            }
        }
        match most_fractional(&sol.x, &red.binaries) {
            None => {
                let mut x = sol.x.clone();
                for &j in &red.binaries {
                    x[j] = x[j].round();
                }
                if best.as_ref().is_none_or(|(inc, _)| node_bound < *inc) {
                    best = Some((red.lp.objective_value(&x), x));
                }
            }
            Some(branch) => {
                let run_heuristic = nodes == 1 || (limits.rounding_every > 0 && nodes % limits.rounding_every == 0);
                if run_heuristic {
                    if let Some((obj, x)) = rounding_heuristic(&mut work, &red, &sol.x, &node.fixes, sol.basis.as_ref(), limits, &opts)? {
                        if best.as_ref().is_none_or(|(inc, _)| obj < *inc) {
                            best = Some((obj, x));
                        }
                    }
                }
                let run_dive = nodes == 1 || (limits.dive_every > 0 && nodes % limits.dive_every == 0);
                if run_dive {
                    let cutoff = best.as_ref().map(|(inc, _)| *inc);
                    if let Some((obj, x)) = dive(&mut work, &red, &sol, &node.fixes, cutoff, limits, &opts)? {
                        if best.as_ref().is_none_or(|(inc, _)| obj < *inc) {
                            best = Some((obj, x));
                        }
                    }
                }
                for v in [0.0, 1.0] {
                    let mut fixes = node.fixes.clone();
                    fixes.push((branch, v));
                    heap.push(Node {
                        bound: node_bound,
                        depth: node.depth + 1,
                        id: next_id,
                        fixes,
                        basis: sol.basis.clone(),
                    });
                    next_id += 1;
                }
            }
        }
        history.push(global);
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let (status, objective, bound, x) = match best {
        Some((obj, xr)) => {
            let bound = if hit_limit { open_bound.min(obj).max(global) } else { obj };
            let status = if hit_limit && bound < obj - prune_tol(obj) {
                MilpStatus::FeasibleAtLimit
            } else {
                MilpStatus::Optimal
            };
            (status, obj, bound.min(obj), red.expand(&xr, &p.binaries))
        }
        None if hit_limit => (MilpStatus::NoSolutionAtLimit, f64::INFINITY, global, Vec::new()),
        None => (MilpStatus::Infeasible, f64::INFINITY, f64::INFINITY, Vec::new()),
    };
    let objective = if status.has_solution() { p.lp.objective_value(&x) } else { objective };
    Ok(MilpSolution { status, x, objective, bound, nodes, bound_history: history })
}

fn prune_tol(inc: f64) -> f64 {
    1e-9 * inc.abs().max(1.0)
}

/// Fixes every binary to a rounded value and solves the remaining LP; tries
/// nearest rounding first and then rounding every positive value up.
fn rounding_heuristic(
    work: &mut LinearProgram,
    red: &Reduced,
    x: &[f64],
    fixes: &[(usize, f64)],
    basis: Option<&Basis>,
    limits: &MilpLimits,
    opts: &SimplexOptions,
) -> Result<Option<(f64, Vec<f64>)>, MilpError> {
    let mut found: Option<(f64, Vec<f64>)> = None;
    for up in [false, true] {
        let mut all = fixes.to_vec();
        for &j in &red.binaries {
            if fixes.iter().any(|&(k, _)| k == j) {
                continue;
            }
            let v = if up { if x[j] > INTEGRALITY_TOL { 1.0 } else { 0.0 } } else { x[j].round() };
            all.push((j, v));
        }
        set_binary_bounds(work, &red.lp, &red.binaries, &all);
        let sol = solve_lp_warm(work, &limits.lp, opts, basis)?;
        if sol.status == LpStatus::Optimal && found.as_ref().is_none_or(|(o, _)| sol.objective < *o) {
            let mut xs = sol.x;
            for &j in &red.binaries {
                xs[j] = xs[j].round();
            }
            found = Some((red.lp.objective_value(&xs), xs));
        }
    }
    set_binary_bounds(work, &red.lp, &red.binaries, fixes);
    Ok(found)
}

/// Fractional diving: repeatedly fixes the binary closest to integrality
/// at its rounded value and re-solves, backtracking once per variable on
/// infeasibility. Stops when the relaxation is integral, infeasible, or no
/// better than `cutoff`.
fn dive(
    work: &mut LinearProgram,
    red: &Reduced,
    start: &LpSolution,
    fixes: &[(usize, f64)],
    cutoff: Option<f64>,
    limits: &MilpLimits,
    opts: &SimplexOptions,
) -> Result<Option<(f64, Vec<f64>)>, MilpError> {
    let mut all = fixes.to_vec();
    let mut x = start.x.clone();
    let mut basis = start.basis.clone();
    let mut found = None;
    for _ in 0..red.binaries.len() {
        let pick = red
            .binaries
            .iter()
            .copied()
            .filter(|&j| (x[j] - x[j].round()).abs() > INTEGRALITY_TOL)
            .min_by(|&a, &b| (x[a] - x[a].round()).abs().total_cmp(&(x[b] - x[b].round()).abs()).then(a.cmp(&b)));
        let Some(j) = pick else {
            let mut xs = x;
            for &b in &red.binaries {
                xs[b] = xs[b].round();
            }
            found = Some((red.lp.objective_value(&xs), xs));
            break;
        };
        let first = x[j].round();
        let mut next = None;
        for v in [first, 1.0 - first] {
            all.push((j, v));
            set_binary_bounds(work, &red.lp, &red.binaries, &all);
            let sol = solve_lp_warm(work, &limits.lp, opts, basis.as_ref())?;
            let promising = sol.status == LpStatus::Optimal && cutoff.is_none_or(|c| sol.objective < c - prune_tol(c));
            if promising {
                next = Some(sol);
                break;
            }
            all.pop();
        }
        match next {
            Some(sol) => {
                x = sol.x;
                basis = sol.basis;
            }
            None => break,
        }
    }
    set_binary_bounds(work, &red.lp, &red.binaries, fixes);
    Ok(found)
}

/// Exact optimum by enumerating every assignment of the (link-reduced)
/// binaries and solving the remaining LP for each.
pub fn brute_force_milp(p: &MilpProblem) -> Result<MilpSolution, MilpError> {
    p.validate()?;
    let red = Reduced::new(p);
    let count = red.binaries.len();
    if count > BRUTE_FORCE_CAP {
        return Err(MilpError::TooManyBinaries { count, cap: BRUTE_FORCE_CAP });
    }
    let mut work = red.lp.clone();
    let limits = LpLimits::default();
    let opts = SimplexOptions::default();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1u32 << count) {
        let fixes: Vec<(usize, f64)> = red
            .binaries
            .iter()
            .enumerate()
            .map(|(b, &j)| (j, if mask >> b & 1 == 1 { 1.0 } else { 0.0 }))
            .collect();
        set_binary_bounds(&mut work, &red.lp, &red.binaries, &fixes);
        let sol = solve_lp_warm(&work, &limits, &opts, None)?;
        if sol.status == LpStatus::Optimal && best.as_ref().is_none_or(|(o, _)| sol.objective < *o) {
            best = Some((sol.objective, sol.x));
        }
    }
    let nodes = 1usize << count;
    Ok(match best {
        Some((obj, xr)) => {
            let x = red.expand(&xr, &p.binaries);
            MilpSolution { status: MilpStatus::Optimal, objective: obj, bound: obj, x, nodes, bound_history: Vec::new() }
        }
        None => MilpSolution {
            status: MilpStatus::Infeasible,
            x: Vec::new(),
            objective: f64::INFINITY,
            bound: f64::INFINITY,
            nodes,
            bound_history: Vec::new(),
        },
    })
}

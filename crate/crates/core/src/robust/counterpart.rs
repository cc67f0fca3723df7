//! Box-uncertainty robust counterparts of single linear rows.
//!
//! A row `a(x) + Σ_j g_j(x) ξ_j ≤ b` that must hold for every `ξ_j ∈ [lo_j, hi_j]`
//! is replaced by `a(x) + Σ_j t_j ≤ b` where `t_j` is a linear expression that
//! bounds `max_ξ g_j(x) ξ_j` from above and attains it at the optimum.

use std::collections::HashMap;

use thermoreg_opt::{LinearProgram, Sense};

use crate::params::Interval;

/// `Σ c_i x_i + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Affine { terms: Vec::new(), constant: c }
    }

    pub fn var(j: usize, c: f64) -> Self {
        Affine { terms: vec![(j, c)], constant: 0.0 }
    }

    pub fn push(&mut self, j: usize, c: f64) {
        if c != 0.0 {
            self.terms.push((j, c));
        }
    }

    pub fn add(&mut self, other: &Affine, scale: f64) {
        for &(j, c) in &other.terms {
            self.push(j, c * scale);
        }
        self.constant += other.constant * scale;
    }

    pub fn scaled(&self, s: f64) -> Affine {
        let mut out = Affine::default();
        out.add(self, s);
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
    }

    /// Sorted, merged, zero-free copy.
    pub fn normalized(&self) -> Affine {
        let mut terms = self.terms.clone();
        terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (j, c) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += c,
                _ => merged.push((j, c)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        Affine { terms: merged, constant: self.constant }
    }

    /// Range of the expression over the variable bounds of `lp`.
    fn range(&self, lp: &LinearProgram) -> (f64, f64) {
        let (mut lo, mut hi) = (self.constant, self.constant);
        for &(j, c) in &self.terms {
            let (a, b) = (c * lp.lower[j], c * lp.upper[j]);
            let (a, b) = if c > 0.0 { (a, b) } else { (b, a) };
            lo += if a.is_nan() { f64::NEG_INFINITY } else { a };
            hi += if b.is_nan() { f64::INFINITY } else { b };
        }
        (lo, hi)
    }
}

/// One uncertain coefficient `g(x) ξ` with `ξ ∈ bounds`.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainTerm {
    pub coeff: Affine,
    pub bounds: Interval,
}

/// `nominal(x) + Σ coeff_j(x) ξ_j ≤ rhs` for all admissible `ξ`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UncertainRow {
    pub nominal: Affine,
    pub uncertain: Vec<UncertainTerm>,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterpartMode {
    /// `t ≥ g·lo`, `t ≥ g·hi`: one variable and two rows per term.
    Epigraph,
    /// `g = p − q`, `p, q ≥ 0`, bound `hi·p − lo·q`: two variables and one row.
    Split,
}

#[derive(Debug, Clone)]
enum Aux {
    Split { p: usize, q: usize, g: Affine },
    Epigraph { t: usize, g: Affine, bounds: Interval },
}

type CacheKey = (Vec<(usize, u64)>, u64, u64, u64);

/// Adds robust rows to an LP, sharing auxiliaries between rows that
/// maximize the same (or negated) coefficient over the same box.
#[derive(Debug)]
pub struct Robustifier {
    mode: CounterpartMode,
    cache: HashMap<CacheKey, usize>,
    aux: Vec<Aux>,
}

fn key(g: &Affine, b: &Interval) -> CacheKey {
    (
        g.terms.iter().map(|&(j, c)| (j, c.to_bits())).collect(),
        g.constant.to_bits(),
        b.lo.to_bits(),
        b.hi.to_bits(),
    )
}

impl Robustifier {
    pub fn new(mode: CounterpartMode) -> Self {
        Robustifier { mode, cache: HashMap::new(), aux: Vec::new() }
    }

    pub fn mode(&self) -> CounterpartMode {
        self.mode
    }

    pub fn aux_count(&self) -> usize {
        self.aux.len()
    }

    /// Linear expression equal to `max_{ξ ∈ bounds} g(x) ξ` at any optimum.
    pub fn worst_case(&mut self, lp: &mut LinearProgram, term: &UncertainTerm) -> Affine {
        let b = term.bounds;
        let g = term.coeff.normalized();
        if b.lo == 0.0 && b.hi == 0.0 {
            return Affine::default();
        }
        if g.terms.is_empty() {
            return Affine::constant((g.constant * b.lo).max(g.constant * b.hi));
        }
        if b.lo == b.hi {
            return g.scaled(b.lo);
        }
        let (gmin, gmax) = g.range(lp);
        if gmin >= 0.0 {
            return g.scaled(b.hi);
        }
        if gmax <= 0.0 {
            return g.scaled(b.lo);
        }
        // canonical sign: first coefficient positive
        let sign = if g.terms[0].1 > 0.0 { 1.0 } else { -1.0 };
        let canon = g.scaled(sign);
        let shareable = match self.mode {
            CounterpartMode::Split => b.lo <= 0.0 && b.hi >= 0.0,
            CounterpartMode::Epigraph => b.lo == -b.hi,
        };
        let k = key(&canon, &b);
        let cached = if shareable { self.cache.get(&k).copied() } else { None };
        let (idx, s) = match cached {
            Some(idx) => (idx, sign),
            None => {
                let idx = self.new_aux(lp, if shareable { canon } else { g }, b);
                if shareable {
                    self.cache.insert(k, idx);
                    (idx, sign)
                } else {
                    (idx, 1.0)
                }
            }
        };
        match &self.aux[idx] {
            Aux::Split { p, q, .. } => {
                // g = s (p − q)
                let (p, q) = if s > 0.0 { (*p, *q) } else { (*q, *p) };
                Affine { terms: vec![(p, b.hi), (q, -b.lo)], constant: 0.0 }
            }
            // symmetric box: max(−g ξ) = max(g ξ)
            Aux::Epigraph { t, .. } => Affine::var(*t, 1.0),
        }
    }

    fn new_aux(&mut self, lp: &mut LinearProgram, g: Affine, b: Interval) -> usize {
        let aux = match self.mode {
            CounterpartMode::Split => {
                let p = lp.add_var(0.0, f64::INFINITY, 0.0);
                let q = lp.add_var(0.0, f64::INFINITY, 0.0);
                let mut coeffs = g.terms.clone();
                coeffs.push((p, -1.0));
                coeffs.push((q, 1.0));
                lp.add_row(coeffs, Sense::Eq, -g.constant);
                Aux::Split { p, q, g }
            }
            CounterpartMode::Epigraph => {
                let t = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0);
                for v in [b.lo, b.hi] {
                    let mut coeffs: Vec<(usize, f64)> = g.terms.iter().map(|&(j, c)| (j, -c * v)).collect();
                    coeffs.push((t, 1.0));
                    lp.add_row(coeffs, Sense::Ge, g.constant * v);
                }
                Aux::Epigraph { t, g, bounds: b }
            }
        };
        self.aux.push(aux);
        self.aux.len() - 1
    }

    /// Adds the deterministic counterpart of `row` as a `≤` row; returns its index.
    pub fn add_le(&mut self, lp: &mut LinearProgram, row: &UncertainRow) -> usize {
        let mut lhs = row.nominal.clone();
        for term in &row.uncertain {
            let wc = self.worst_case(lp, term);
            lhs.add(&wc, 1.0);
        }
        let lhs = lhs.normalized();
        lp.add_row(lhs.terms, Sense::Le, row.rhs - lhs.constant)
    }

    /// `nominal + Σ g ξ ≥ rhs` for all `ξ`, added as a `≤` row on the negation.
    pub fn add_ge(&mut self, lp: &mut LinearProgram, row: &UncertainRow) -> usize {
        let neg = UncertainRow {
            nominal: row.nominal.scaled(-1.0),
            uncertain: row
                .uncertain
                .iter()
                .map(|t| UncertainTerm { coeff: t.coeff.scaled(-1.0), bounds: t.bounds })
                .collect(),
            rhs: -row.rhs,
        };
        self.add_le(lp, &neg)
    }

    /// Sets every auxiliary to its tightest value for the primary variables in `x`.
    pub fn complete(&self, x: &mut [f64]) {
        for aux in &self.aux {
            match aux {
                Aux::Split { p, q, g } => {
                    let v = g.eval(x);
                    x[*p] = v.max(0.0);
                    x[*q] = (-v).max(0.0);
                }
                Aux::Epigraph { t, g, bounds } => {
                    let v = g.eval(x);
                    x[*t] = (v * bounds.lo).max(v * bounds.hi);
                }
            }
        }
    }
}

/// Counterpart of a single row with fresh auxiliaries.
pub fn robustify_row(lp: &mut LinearProgram, row: &UncertainRow, mode: CounterpartMode) -> usize {
    Robustifier::new(mode).add_le(lp, row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use thermoreg_opt::{solve_lp, LpLimits, LpStatus};

    #[test]
    fn constant_coefficients_take_absolute_sum() {
        for mode in [CounterpartMode::Split, CounterpartMode::Epigraph] {
            let mut lp = LinearProgram::new();
            let x = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, -1.0);
            let row = UncertainRow {
                nominal: Affine::var(x, 1.0),
                uncertain: vec![
                    UncertainTerm { coeff: Affine::constant(1.0), bounds: Interval::symmetric(1.0) },
                    UncertainTerm { coeff: Affine::constant(-2.0), bounds: Interval::symmetric(1.0) },
                ],
                rhs: 5.0,
            };
            let r = robustify_row(&mut lp, &row, mode);
            assert_eq!(lp.rows[r].rhs, 2.0);
            let sol = solve_lp(&lp, &LpLimits::default()).unwrap();
            assert!((sol.x[x] - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_coefficient_leaves_row_unchanged() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(0.0, 10.0, 0.0);
        let y = lp.add_var(-1.0, 1.0, 0.0);
        let row = UncertainRow {
            nominal: Affine { terms: vec![(x, 1.0)], constant: 0.5 },
            uncertain: vec![UncertainTerm { coeff: Affine { terms: vec![(y, 0.0)], constant: 0.0 }, bounds: Interval::symmetric(3.0) }],
            rhs: 4.0,
        };
        let r = robustify_row(&mut lp, &row, CounterpartMode::Split);
        assert_eq!(lp.num_vars(), 2);
        assert_eq!(lp.rows[r].coeffs, vec![(x, 1.0)]);
        assert_eq!(lp.rows[r].rhs, 3.5);
    }

    #[test]
    fn sign_known_coefficient_needs_no_auxiliary() {
        let mut lp = LinearProgram::new();
        let r = lp.add_var(0.0, 2.0, 0.0);
        let mut rob = Robustifier::new(CounterpartMode::Split);
        let wc = rob.worst_case(&mut lp, &UncertainTerm { coeff: Affine::var(r, 2.0), bounds: Interval::new(-0.5, 1.0) });
        assert_eq!(wc.terms, vec![(r, 2.0)]);
        assert_eq!(rob.aux_count(), 0);
    }

    #[test]
    fn negated_terms_share_auxiliaries() {
        let mut lp = LinearProgram::new();
        let a = lp.add_var(-1.0, 1.0, 0.0);
        let b = lp.add_var(-1.0, 1.0, 0.0);
        let g = Affine { terms: vec![(a, 1.0), (b, -1.0)], constant: 0.2 };
        let mut rob = Robustifier::new(CounterpartMode::Split);
        let box_ = Interval::symmetric(0.25);
        rob.worst_case(&mut lp, &UncertainTerm { coeff: g.clone(), bounds: box_ });
        rob.worst_case(&mut lp, &UncertainTerm { coeff: g.scaled(-1.0), bounds: box_ });
        assert_eq!(rob.aux_count(), 1);
        rob.worst_case(&mut lp, &UncertainTerm { coeff: g, bounds: Interval::symmetric(0.5) });
        assert_eq!(rob.aux_count(), 2);
    }

    #[test]
    fn completion_satisfies_auxiliary_rows() {
        for mode in [CounterpartMode::Split, CounterpartMode::Epigraph] {
            let mut lp = LinearProgram::new();
            let a = lp.add_var(-1.0, 1.0, 0.0);
            let row = UncertainRow {
                nominal: Affine::default(),
                uncertain: vec![UncertainTerm { coeff: Affine { terms: vec![(a, 3.0)], constant: -1.0 }, bounds: Interval::new(-0.5, 2.0) }],
                rhs: 100.0,
            };
            let mut rob = Robustifier::new(mode);
            rob.add_le(&mut lp, &row);
            let mut x = vec![0.0; lp.num_vars()];
            x[a] = 0.7;
            rob.complete(&mut x);
            assert!(lp.max_violation(&x) < 1e-12);
            let sol = solve_lp(&lp, &LpLimits::default()).unwrap();
            assert_eq!(sol.status, LpStatus::Optimal);
        }
    }
}

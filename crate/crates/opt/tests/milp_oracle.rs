//! Branch and bound checked against exhaustive enumeration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermoreg_opt::{brute_force_milp, solve_milp, LinearProgram, MilpLimits, MilpProblem, MilpStatus, Sense};

/// Random instance with `nb ≤ 12` binaries, a few continuous columns and
/// big-M style coupling rows similar to on/off capacity constraints.
pub fn random_milp(rng: &mut ChaCha8Rng) -> MilpProblem {
    let nb = rng.random_range(1..=12);
    let nc = rng.random_range(1..=4);
    let mut lp = LinearProgram::new();
    let bins: Vec<usize> = (0..nb).map(|_| lp.add_var(0.0, 1.0, rng.random_range(-3.0..3.0))).collect();
    let conts: Vec<usize> = (0..nc).map(|_| lp.add_var(0.0, 5.0, rng.random_range(-2.0..2.0))).collect();
    let rows = rng.random_range(2..=8);
    for _ in 0..rows {
        let mut coeffs = Vec::new();
        for &j in bins.iter().chain(&conts) {
            if rng.random_bool(0.5) {
                coeffs.push((j, rng.random_range(-4.0..4.0)));
            }
        }
        let sense = if rng.random_bool(0.8) { Sense::Le } else { Sense::Ge };
        let rhs = match sense {
            Sense::Le => rng.random_range(0.0..6.0),
            _ => rng.random_range(-6.0..0.5),
        };
        lp.add_row(coeffs, sense, rhs);
    }
    // on/off coupling: c ≤ 5 b
    for (k, &c) in conts.iter().enumerate() {
        lp.add_row([(c, 1.0), (bins[k % nb], -5.0)], Sense::Le, 0.0);
    }
    let mut p = MilpProblem::new(lp, bins.clone());
    if nb >= 4 && rng.random_bool(0.3) {
        p.links.push(vec![bins[0], bins[1]]);
    }
    p
}

#[test]
fn branch_and_bound_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut feasible = 0;
    for case in 0..200 {
        let p = random_milp(&mut rng);
        let bb = solve_milp(&p, &MilpLimits::default()).unwrap();
        let bf = brute_force_milp(&p).unwrap();
        assert_eq!(bb.status == MilpStatus::Infeasible, bf.status == MilpStatus::Infeasible, "case {case}");
        if bf.status == MilpStatus::Optimal {
            feasible += 1;
            assert_eq!(bb.status, MilpStatus::Optimal, "case {case}");
            let tol = 1e-6 * bf.objective.abs().max(1.0);
            assert!((bb.objective - bf.objective).abs() <= tol, "case {case}: {} vs {}", bb.objective, bf.objective);
            assert!((bb.bound - bb.objective).abs() <= tol);
            assert!(p.lp.max_violation(&bb.x) <= 1e-6, "case {case}");
            for &j in &p.binaries {
                assert!(bb.x[j] == 0.0 || bb.x[j] == 1.0);
            }
            for g in &p.links {
                assert!(g.iter().all(|&j| bb.x[j] == bb.x[g[0]]));
            }
        }
    }
    assert!(feasible > 150, "{feasible}");
}

#[test]
fn global_bound_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..50 {
        let p = random_milp(&mut rng);
        let sol = solve_milp(&p, &MilpLimits::default()).unwrap();
        assert!(sol.bound_history.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn node_cap_keeps_bound_below_incumbent() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let p = random_milp(&mut rng);
        let limits = MilpLimits { max_nodes: 2, ..MilpLimits::default() };
        let sol = solve_milp(&p, &limits).unwrap();
        if sol.status == MilpStatus::FeasibleAtLimit {
            assert!(sol.bound <= sol.objective + 1e-9);
            let exact = brute_force_milp(&p).unwrap();
            assert!(sol.bound <= exact.objective + 1e-6);
            assert!(exact.objective <= sol.objective + 1e-6);
        }
    }
}

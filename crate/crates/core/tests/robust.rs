//! Properties of the robust schedule builders checked against brute-force
//! oracles.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermoreg_core::params::{validate_params, Checked, Interval, SystemParams, UncertaintySets};
use thermoreg_core::robust::*;
use thermoreg_opt::{solve_lp, LinearProgram, LpLimits, LpStatus, MilpLimits, MilpStatus, Sense};

fn checked(n: usize, sets: UncertaintySets) -> Checked {
    validate_params(SystemParams { horizon_steps: n, ..Default::default() }, sets).unwrap()
}

fn solve(sp: &ScheduleProblem) -> Solved {
    let s = solve_schedule(sp, &MilpLimits::default()).unwrap();
    assert_eq!(s.solution.status, MilpStatus::Optimal, "{}", sp.mode.name());
    s
}

// ---------------------------------------------------------------- counterpart

/// Worst case of `nominal + Σ g_j ξ_j` by enumerating every box vertex.
fn vertex_max(nominal: f64, g: &[f64], boxes: &[Interval]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << g.len()) {
        let v: f64 = g
            .iter()
            .zip(boxes)
            .enumerate()
            .map(|(j, (gj, b))| gj * if mask >> j & 1 == 1 { b.hi } else { b.lo })
            .sum();
        best = best.max(nominal + v);
    }
    best
}

/// Minimizes `s` subject to the robust row `nominal(x) + Σ g_j(x) ξ_j − s ≤ 0`
/// with `x` pinned by equality rows, so the optimum is the counterpart's
/// worst-case value.
fn counterpart_max(rng: &mut ChaCha8Rng, mode: CounterpartMode) -> (f64, f64) {
    let nx = rng.random_range(1..=4);
    let nu = rng.random_range(1..=8);
    let mut lp = LinearProgram::new();
    let xs: Vec<usize> = (0..nx).map(|_| lp.add_var(-5.0, 5.0, 0.0)).collect();
    let vals: Vec<f64> = (0..nx).map(|_| rng.random_range(-4.0..4.0)).collect();
    for (&j, &v) in xs.iter().zip(&vals) {
        lp.add_row([(j, 1.0)], Sense::Eq, v);
    }
    let s = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 1.0);
    let mut row = UncertainRow { nominal: Affine::var(s, -1.0), uncertain: Vec::new(), rhs: 0.0 };
    let mut nominal = 0.0;
    for &j in &xs {
        let c = rng.random_range(-2.0..2.0);
        row.nominal.push(j, c);
        nominal += c * vals[j];
    }
    let (mut g_vals, mut boxes) = (Vec::new(), Vec::new());
    for _ in 0..nu {
        let mut g = Affine::constant(if rng.random_bool(0.5) { rng.random_range(-1.0..1.0) } else { 0.0 });
        for &j in &xs {
            if rng.random_bool(0.6) {
                g.push(j, rng.random_range(-2.0..2.0));
            }
        }
        let lo = rng.random_range(-3.0..0.5);
        let b = Interval::new(lo, lo + rng.random_range(0.0..3.0));
        g_vals.push(g.eval(&vals));
        boxes.push(b);
        row.uncertain.push(UncertainTerm { coeff: g, bounds: b });
    }
    robustify_row(&mut lp, &row, mode);
    let sol = solve_lp(&lp, &LpLimits::default()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    (sol.objective, vertex_max(nominal, &g_vals, &boxes))
}

#[test]
fn counterpart_matches_vertex_enumeration() {
    for mode in [CounterpartMode::Split, CounterpartMode::Epigraph] {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..300 {
            let (got, want) = counterpart_max(&mut rng, mode);
            assert!((got - want).abs() <= 1e-7 * want.abs().max(1.0), "{mode:?} case {case}: {got} vs {want}");
        }
    }
}

// ------------------------------------------------------------ schedule rows

#[test]
fn zero_uncertainty_collapses_all_modes() {
    for v in [0.0, 12.0, 27.0, 41.0] {
        let c = checked(6, UncertaintySets::none());
        let af = ScheduleProblem::new(&c, 31.0, vec![v; 6], Mode::Affine).unwrap();
        let ol = af.with_mode(Mode::OpenLoop).unwrap();
        let om = af.with_mode(Mode::Omniscient(Realization::zero(6))).unwrap();
        let (a, o, m) = (solve(&af).policy.objective, solve(&ol).policy.objective, solve(&om).policy.objective);
        assert!((a - o).abs() <= 1e-6 && (a - m).abs() <= 1e-6, "v={v}: {a} {o} {m}");
    }
}

#[test]
fn zero_demand_without_uncertainty_stays_off() {
    let c = checked(4, UncertaintySets::none());
    let sp = ScheduleProblem::new(&c, 38.0, vec![0.0; 4], Mode::Affine).unwrap();
    let p = solve(&sp).policy;
    assert!(p.base.iter().chain(&p.reserves).all(|&v| v == 0.0));
    assert!(p.on.iter().all(|&z| !z));
    assert_eq!(p.objective, 0.0);
}

fn random_problem(rng: &mut ChaCha8Rng) -> ScheduleProblem {
    let n = rng.random_range(1..=4);
    let sets = UncertaintySets {
        w: Interval::symmetric(1.0),
        wbar: Interval::symmetric(rng.random_range(0.0..0.5)),
        de: Interval::new(-rng.random_range(0.0..6.0), rng.random_range(0.0..6.0)),
    };
    let c = checked(n, sets);
    let forecast = (0..n).map(|_| rng.random_range(0.0..50.0)).collect();
    let sp = ScheduleProblem::new(&c, rng.random_range(27.0..39.0), forecast, Mode::Affine).unwrap();
    let memory = if rng.random_bool(0.5) { None } else { Some(rng.random_range(0..3)) };
    sp.with_options(BuildOptions { policy_memory: memory, ..Default::default() })
}

#[test]
fn solved_policies_survive_every_vertex() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..60 {
        let sp = random_problem(&mut rng);
        let s = solve(&sp);
        s.policy.check(&sp.params).unwrap();
        let v = worst_case_check(&s.policy, &sp);
        assert!(v <= 1e-6, "case {case}: violation {v}");
    }
}

#[test]
fn corrupted_policy_is_caught() {
    let c = checked(4, UncertaintySets::default());
    let sp = ScheduleProblem::new(&c, 33.0, vec![30.0; 4], Mode::Affine).unwrap();
    let mut p = solve(&sp).policy;
    let k = (1..4).find(|&k| p.on[k]).expect("pump runs at 30 kW");
    p.dd[k][0] += 5.0;
    assert!(worst_case_check(&p, &sp) > 1.0);
}

#[test]
fn policy_structure_invariants() {
    let c = checked(8, UncertaintySets::default());
    for v in [8.0, 20.0, 35.0] {
        let sp = ScheduleProblem::new(&c, 30.0, vec![v; 8], Mode::Affine).unwrap();
        let p = solve(&sp).policy;
        for k in 0..8 {
            for j in k..8 {
                assert_eq!((p.dw[k][j], p.dd[k][j]), (0.0, 0.0));
            }
            if !p.on[k] {
                assert_eq!((p.base[k], p.reserves[k]), (0.0, 0.0));
                assert!(p.dw[k].iter().chain(&p.dd[k]).all(|&d| d == 0.0));
            }
            let r = p.reserves[k];
            assert!(r == 0.0 || (sp.params.r_min - 1e-9..=sp.params.r_max + 1e-9).contains(&r));
            if r > 0.0 {
                assert!(p.base[k] - r >= sp.params.u_min - 1e-7);
                assert!(p.base[k] + r <= sp.params.u_max + 1e-7);
            }
            assert!(p.slack[k] >= 0.0);
        }
    }
}

#[test]
fn feedback_never_hurts() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        let sp = random_problem(&mut rng);
        let a = solve(&sp).policy.objective;
        let o = solve(&sp.with_mode(Mode::OpenLoop).unwrap()).policy.objective;
        assert!(a <= o + 1e-6 * o.abs().max(1.0), "{a} > {o}");
    }
}

#[test]
fn feedback_strictly_helps_at_moderate_demand() {
    let c = checked(12, UncertaintySets::default());
    let sp = ScheduleProblem::new(&c, 30.0, vec![25.0; 12], Mode::Affine).unwrap();
    let limits = MilpLimits { max_nodes: 400, ..Default::default() };
    let a = solve_schedule(&sp, &limits).unwrap().policy.objective;
    let o = solve_schedule(&sp.with_mode(Mode::OpenLoop).unwrap(), &limits).unwrap().policy.objective;
    assert!(a < o - 1.0, "{a} vs {o}");
}

#[test]
fn low_demand_offers_almost_no_reserves() {
    let c = checked(12, UncertaintySets::default());
    let sp = ScheduleProblem::new(&c, 33.0, vec![5.0; 12], Mode::Affine).unwrap();
    let limits = MilpLimits { max_nodes: 400, ..Default::default() };
    let p = solve_schedule(&sp, &limits).unwrap().policy;
    assert!(p.total_reserves() <= sp.params.r_max, "{}", p.total_reserves());
}

#[test]
fn clairvoyance_dominates_each_realization() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let sp = random_problem(&mut rng);
        let pol = solve(&sp).policy;
        for _ in 0..5 {
            let rz = Realization::sample(&mut rng, &sp.sets, sp.horizon());
            let realized = realized_outcome(&pol, &sp, &rz);
            assert!(realized.capacity_violation <= 1e-6);
            let om = solve(&sp.with_mode(Mode::Omniscient(rz)).unwrap()).policy.objective;
            assert!(om <= realized.cost + 1e-6 * realized.cost.abs().max(1.0), "{om} > {}", realized.cost);
        }
    }
}

// ------------------------------------------------------------------ level 2

#[test]
fn last_step_uses_minimum_sufficient_load() {
    let n = 8;
    let c = checked(n, UncertaintySets::default());
    let (x0, v) = (29.0, 38.0);
    let mode = Mode::Level2 { kappa: n, reserves: vec![0.0], prev_on: None };
    let sp = ScheduleProblem::new(&c, x0, vec![v], mode).unwrap();
    let p = solve(&sp).policy;
    let (pr, bt) = (&sp.params, sp.model.b_tilde);
    let need = (v - sp.sets.de.lo - (x0 - pr.x_min) / bt) / pr.cop;
    assert!((pr.u_min..=pr.u_max).contains(&need));
    assert!((p.base[0] - need).abs() <= 1e-6, "{} vs {need}", p.base[0]);
    assert!(p.slack[0] <= 1e-9);
}

#[test]
fn level2_from_start_is_no_worse_than_level1() {
    let n = 8;
    let c = checked(n, UncertaintySets::default());
    let forecast: Vec<f64> = (0..n).map(|k| 20.0 + 2.0 * k as f64).collect();
    let l1 = ScheduleProblem::new(&c, 31.0, forecast.clone(), Mode::Affine).unwrap();
    let p1 = solve(&l1).policy;
    let l1_cost = p1.objective + c.params.benefit_res * p1.total_reserves();
    let mode = Mode::Level2 { kappa: 1, reserves: p1.reserves.clone(), prev_on: None };
    let p2 = solve(&l1.with_mode(mode).unwrap()).policy;
    assert!(p2.objective <= l1_cost + 1e-6, "{} > {l1_cost}", p2.objective);
    assert_eq!(p2.reserves, p1.reserves);
}

#[test]
fn level2_without_demand_or_uncertainty_is_idle() {
    let c = checked(8, UncertaintySets::none());
    let mode = Mode::Level2 { kappa: 3, reserves: vec![0.0; 6], prev_on: Some(false) };
    let sp = ScheduleProblem::new(&c, 33.0, vec![0.0; 6], mode).unwrap();
    let p = solve(&sp).policy;
    assert!(p.base.iter().all(|&u| u == 0.0));
}

#[test]
fn level2_keeps_a_running_block_on() {
    let c = checked(8, UncertaintySets::none());
    // step 2 (κ = 2) is the second half of the first on/off block
    let mode = Mode::Level2 { kappa: 2, reserves: vec![0.0; 7], prev_on: Some(true) };
    let sp = ScheduleProblem::new(&c, 37.0, vec![0.0; 7], mode).unwrap();
    let p = solve(&sp).policy;
    assert!(p.on[0]);
    assert!(p.base[0] >= sp.params.u_min - 1e-9);
    assert!(p.on[1..].iter().all(|&z| !z));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn counterpart_is_exact(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (got, want) = counterpart_max(&mut rng, CounterpartMode::Split);
        prop_assert!((got - want).abs() <= 1e-7 * want.abs().max(1.0));
    }

    #[test]
    fn schedules_are_deterministic(seed in any::<u64>()) {
        let sp = random_problem(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = solve(&sp);
        let b = solve(&sp);
        prop_assert_eq!(a.policy, b.policy);
    }
}

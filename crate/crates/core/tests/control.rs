//! The control hierarchy: PI tracking on the simulated pump, the two
//! scheduling levels, and whole-day closed-loop runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thermoreg_core::control::*;
use thermoreg_core::params::{validate_params, Checked, SystemParams, UncertaintySets};
use thermoreg_core::plant::{heat_pump_step, DemandConfig, HeatPumpConfig, HeatPumpState};
use thermoreg_core::robust::Hint;

fn checked(n: usize, sets: UncertaintySets) -> Checked {
    validate_params(SystemParams { horizon_steps: n, ..Default::default() }, sets).unwrap()
}

fn settings() -> SolverSettings {
    SolverSettings::default()
}

#[test]
fn pi_settles_after_a_load_step() {
    let cfg = HeatPumpConfig::from_params(&SystemParams::default());
    let pi_cfg = PiConfig::default();
    let n0 = cfg.speed_for(9.0);
    let mut hp = HeatPumpState { n_set: n0.round(), n: n0, power: cfg.power_at(n0), on: true, seconds_on: 1e6 };
    let mut pi = PiState::bumpless(pi_cfg, hp.n);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut measured = hp.power;
    let mut last_outside = 0.0;
    let mut t = 0.0;
    while t < 180.0 {
        let (next, n_set) = pi_step(&pi, 11.0, measured, hp.n);
        pi = next;
        let st = heat_pump_step(&cfg, &hp, n_set, pi_cfg.dt, &mut rng);
        hp = st.state;
        measured = st.measured;
        t += pi_cfg.dt;
        if (hp.power - 11.0).abs() > 0.3 {
            last_outside = t;
        }
    }
    assert!(last_outside <= 60.0, "left the ±0.3 kW band at {last_outside} s");
}

#[test]
fn level1_without_demand_or_uncertainty_stays_off() {
    let c = checked(24, UncertaintySets::none());
    let plan = run_level1(&c, 0, c.params.x_max, vec![0.0; 24], &settings(), true).unwrap();
    assert!(plan.policy.on.iter().all(|on| !on));
    assert_eq!(plan.policy.total_reserves(), 0.0);
}

#[test]
fn flat_demand_earns_reserves() {
    let c = checked(96, UncertaintySets::default());
    let plan = run_level1(&c, 0, 33.0, vec![25.0; 96], &settings(), true).unwrap();
    assert!(plan.policy.total_reserves() > 0.0);
    for (k, &r) in plan.reserves.iter().enumerate() {
        assert!(r == 0.0 || (c.params.r_min - 1e-9..=c.params.r_max + 1e-9).contains(&r), "step {k}: {r}");
    }
}

#[test]
fn low_forecast_keeps_the_pump_mostly_off() {
    let c = checked(96, UncertaintySets::default());
    let plan = run_level1(&c, 0, 33.0, vec![5.0; 96], &settings(), true).unwrap();
    let on = plan.policy.on.iter().filter(|&&b| b).count();
    assert!(on < 48, "{on} of 96 steps on");
}

#[test]
fn level2_from_the_first_step_reproduces_the_plan() {
    let c = checked(24, UncertaintySets::default());
    let f = vec![25.0; 24];
    let plan = run_level1(&c, 0, 33.0, f.clone(), &settings(), true).unwrap();
    let hint = Hint::from_policy(&plan.policy);
    let l2 = run_level2(&c, 1, 33.0, f, &plan, None, &[hint], &settings()).unwrap();
    // Level 2 drops the reserve benefit from the objective
    let expected = plan.policy.objective + c.params.benefit_res * plan.policy.total_reserves();
    assert!(l2.policy.objective <= expected + 1e-6 * expected.abs(), "{} > {expected}", l2.policy.objective);
    assert!((l2.base() - plan.policy.base[0]).abs() < 1e-6 || l2.policy.objective < expected - 1e-6);
    assert_eq!(l2.policy.reserves, plan.reserves);
}

#[test]
fn level2_heats_harder_near_the_lower_bound() {
    let c = checked(24, UncertaintySets::default());
    let f = vec![20.0; 24];
    let plan = run_level1(&c, 0, 33.0, f.clone(), &settings(), true).unwrap();
    let hint = [Hint::from_policy(&plan.policy).tail(4)];
    let at = |x: f64| run_level2(&c, 5, x, f[4..].to_vec(), &plan, None, &hint, &settings()).unwrap();
    let (cold, warm) = (at(28.3), at(36.0));
    let load = |d: &Level2Decision| if d.on() { d.base() } else { 0.0 };
    assert!(load(&cold) >= load(&warm), "cold {} < warm {}", load(&cold), load(&warm));
    assert!(cold.on());
}

fn flat_day(level: f64, offer_reserves: bool) -> ScenarioConfig {
    ScenarioConfig {
        days: 1,
        history_days: 0,
        demand: DemandConfig::flat(level),
        forecast: ForecastMode::Perfect,
        offer_reserves,
        ..ScenarioConfig::default()
    }
}

#[test]
fn zero_reserve_day_stays_in_the_band() {
    let c = checked(96, UncertaintySets::default());
    let log = run_closed_loop(&c, &flat_day(25.0, false)).unwrap();
    assert_eq!(log.steps.len(), 96);
    for s in &log.steps {
        assert!((c.params.x_min..=c.params.x_max).contains(&s.x_end), "step {}: {}", s.step, s.x_end);
        assert_eq!(s.r, 0.0);
    }
    assert!(log.hours.iter().all(|h| h.composite.is_none()));
    let r: Vec<f64> = log.steps.iter().map(|s| s.r).collect();
    let u: Vec<f64> = log.steps.iter().map(|s| s.mean_measured).collect();
    assert_eq!(thermoreg_core::scoring::flexibility_share(&r, &u), 0.0);
}

#[test]
fn closed_loop_log_invariants() {
    let c = checked(96, UncertaintySets::default());
    let log = run_closed_loop(&c, &flat_day(25.0, true)).unwrap();
    let plan = &log.plans[0];
    assert!(plan.policy.total_reserves() > 0.0);
    for s in &log.steps {
        assert_eq!(s.r, plan.reserves[s.step], "step {}", s.step);
    }
    for f in &log.fast {
        let s = &log.steps[(f.t / 900.0) as usize];
        if s.on {
            assert!((f.target - (s.u0 + f.w * s.r)).abs() < 1e-9, "t = {}", f.t);
            assert!((f.regulation - f.w * s.r).abs() < 1e-12);
        } else {
            assert_eq!((f.target, f.regulation), (0.0, 0.0));
        }
        assert!(f.n_set == 0.0 || (20.0..=50.0).contains(&f.n_set), "n_set {}", f.n_set);
        assert!((-1.0..=1.0).contains(&f.w));
    }
    assert_eq!(log.fast.len(), 96 * 450);
    assert_eq!(log.hours.len(), 24);
}

#[test]
fn days_must_be_positive() {
    let c = checked(96, UncertaintySets::default());
    let err = run_closed_loop(&c, &ScenarioConfig { days: 0, ..flat_day(25.0, true) }).unwrap_err();
    assert!(matches!(err.error, ControlError::Scenario(_)));
    assert!(err.partial.steps.is_empty());
}

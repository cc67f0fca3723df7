use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thermoreg_core::params::{average_tank_temperature, SystemParams, TankState};
use thermoreg_core::plant::{gen_demand_profile, gen_regulation_signal, heat_pump_step, interval_stats, step_tank, DemandConfig, HeatPumpConfig, HeatPumpState, RegSignal, SignalConfig, TankConfig};

fn ordered_tank() -> impl Strategy<Value = TankState> {
    (prop::collection::vec(0.0f64..3.0, 6), 27.0f64..36.0, prop::collection::vec(0.5f64..2.0, 6)).prop_map(|(gaps, bottom, w)| {
        let mut temps = vec![bottom; 6];
        for i in (0..5).rev() {
            temps[i] = temps[i + 1] + gaps[i];
        }
        let s: f64 = w.iter().sum();
        TankState { layer_temps: temps, layer_weights: w.iter().map(|x| x / s).collect() }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tank_matches_the_average_integrator(
        start in ordered_tank(),
        inputs in prop::collection::vec((0.0f64..45.0, 0.0f64..50.0, prop::sample::select(vec![0.5, 2.0, 60.0, 900.0])), 1..40),
    ) {
        let p = SystemParams::default();
        let cfg = TankConfig::from(&p);
        let x0 = average_tank_temperature(&start).unwrap();
        let (mut s, mut x, mut moved) = (start, x0, 0.0);
        for (u, v, dt) in inputs {
            s = step_tank(&s, u, v, dt, &cfg);
            let dx = (u - v) * dt * 1000.0 / (p.water_mass * p.specific_heat);
            x += dx;
            moved += dx.abs();
            let avg = average_tank_temperature(&s).unwrap();
            prop_assert!((avg - x).abs() <= 1e-6 * moved.max(1.0), "avg {avg} integrator {x}");
            prop_assert!(s.layer_temps.windows(2).all(|t| t[0] >= t[1] - 1e-9));
            prop_assert!(s.top() >= avg - 1e-9 && avg >= s.bottom() - 1e-9);
        }
    }
}

#[test]
fn one_step_integrator_uses_b_tilde() {
    let p = SystemParams::default();
    let b = thermoreg_core::params::discretize(&p).b_tilde;
    let s = step_tank(&TankState::uniform(31.0), 20.0, 12.5, 900.0, &TankConfig::from(&p));
    assert!((average_tank_temperature(&s).unwrap() - (31.0 + b * 7.5)).abs() < 1e-9);
}

#[test]
fn signal_calibration_over_a_thousand_days() {
    let cfg = SignalConfig::default();
    let (mut lo, mut hi, mut total, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for seed in 0..1000 {
        let sig = gen_regulation_signal(seed, 86_400, &cfg).unwrap();
        for k in 0..96 {
            let m = interval_stats(&sig, k, 900).unwrap().mean;
            assert!(cfg.wbar.contains(m));
            lo = lo.min(m);
            hi = hi.max(m);
            total += m;
            n += 1;
        }
    }
    assert!(lo <= -0.2 && hi >= 0.2, "span [{lo}, {hi}]");
    assert!((total / n as f64).abs() < 0.05);
}

#[test]
fn zero_signal_is_zero() {
    let z = RegSignal::zero(3600);
    assert_eq!(z.samples.len(), 1800);
    assert!(z.samples.iter().all(|&w| w == 0.0));
}

#[test]
fn default_demand_stays_in_range_over_three_days() {
    for seed in 0..50 {
        let sc = gen_demand_profile(seed, 3, &DemandConfig::default());
        assert_eq!(sc.len(), 288);
        for day in sc.demand.chunks(96) {
            let min = day.iter().copied().fold(f64::INFINITY, f64::min);
            let max = day.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(min >= 10.0 && max <= 45.0);
        }
    }
}

#[test]
fn demand_holds_within_a_step() {
    let sc = gen_demand_profile(4, 1, &DemandConfig::default());
    assert_eq!(sc.at(0.0), sc.demand[0]);
    assert_eq!(sc.at(899.9), sc.demand[0]);
    assert_eq!(sc.at(900.0), sc.demand[1]);
}

#[test]
fn plant_is_deterministic_under_a_seed() {
    let p = SystemParams::default();
    let run = || {
        let hp_cfg = HeatPumpConfig::from_params(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut hp = HeatPumpState::default();
        let mut tank = TankState::uniform(32.0);
        let mut out = Vec::new();
        for i in 0..2000 {
            let st = heat_pump_step(&hp_cfg, &hp, 20.0 + (i % 30) as f64, 0.5, &mut rng);
            hp = st.state;
            tank = step_tank(&tank, st.thermal, 25.0, 0.5, &TankConfig::from(&p));
            out.push(st.measured);
        }
        (out, tank)
    };
    assert_eq!(run(), run());
}

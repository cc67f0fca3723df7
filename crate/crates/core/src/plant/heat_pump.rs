use rand::Rng;

use crate::params::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatPumpConfig {
    pub u_min: f64,
    pub u_max: f64,
    pub cop: f64,
    /// Compressor speed (percent) at which the pump draws `u_min`.
    pub n_low: f64,
    /// Compressor speed (percent) at which the pump draws `u_max`.
    pub n_high: f64,
    /// First-order lag of the compressor speed, s.
    pub time_constant: f64,
    /// Largest speed change, percent per second.
    pub ramp: f64,
    /// Half-width of the uniform power-meter noise, kW.
    pub meter_noise: f64,
    /// Half-width of the relative COP jitter.
    pub cop_jitter: f64,
    /// Seconds after switch-on during which the set point is ignored.
    pub warmup: f64,
}

impl HeatPumpConfig {
    pub fn from_params(p: &SystemParams) -> Self {
        HeatPumpConfig {
            u_min: p.u_min,
            u_max: p.u_max,
            cop: p.cop,
            n_low: 20.0,
            n_high: 50.0,
            time_constant: 10.0,
            ramp: 1.0,
            meter_noise: 0.2,
            cop_jitter: 0.02,
            warmup: 300.0,
        }
    }

    /// Electric power at speed `n` (affine between the two calibration points).
    pub fn power_at(&self, n: f64) -> f64 {
        self.u_min + (self.u_max - self.u_min) * (n - self.n_low) / (self.n_high - self.n_low)
    }

    /// Speed that draws `u` kW, inverse of [`power_at`](Self::power_at).
    pub fn speed_for(&self, u: f64) -> f64 {
        self.n_low + (u - self.u_min) * (self.n_high - self.n_low) / (self.u_max - self.u_min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HeatPumpState {
    /// Last accepted set point (integer percent).
    pub n_set: f64,
    /// Actual compressor speed, percent.
    pub n: f64,
    /// True electric power, kW.
    pub power: f64,
    pub on: bool,
    pub seconds_on: f64,
}

impl HeatPumpState {
    pub fn warming_up(&self, cfg: &HeatPumpConfig) -> bool {
        self.on && self.seconds_on < cfg.warmup
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatPumpStep {
    pub state: HeatPumpState,
    /// Metered electric power, kW.
    pub measured: f64,
    /// Thermal power delivered to the tank, kW.
    pub thermal: f64,
}

/// Advances the heat pump by `dt` seconds. A set point of zero or less
/// switches it off; any positive set point keeps it (or switches it) on.
pub fn heat_pump_step(cfg: &HeatPumpConfig, hp: &HeatPumpState, n_set: f64, dt: f64, rng: &mut impl Rng) -> HeatPumpStep {
    if n_set <= 0.0 {
        return HeatPumpStep { state: HeatPumpState::default(), measured: 0.0, thermal: 0.0 };
    }
    let mut s = *hp;
    if !s.on {
        s = HeatPumpState { on: true, ..HeatPumpState::default() };
    }
    s.seconds_on += dt;
    if s.seconds_on <= cfg.warmup {
        let frac = s.seconds_on / cfg.warmup;
        s.power = cfg.u_min * frac;
        s.n = cfg.n_low * frac;
        s.n_set = cfg.n_low;
    } else {
        s.n_set = n_set.round().clamp(cfg.n_low, cfg.n_high);
        let lagged = s.n_set + (s.n - s.n_set) * (-dt / cfg.time_constant).exp();
        let max_step = cfg.ramp * dt;
        s.n = (s.n + (lagged - s.n).clamp(-max_step, max_step)).clamp(0.0, 100.0);
        s.power = cfg.power_at(s.n).clamp(0.0, cfg.u_max);
    }
    let noise = rng.random_range(-1.0..=1.0) * cfg.meter_noise;
    let jitter = rng.random_range(-1.0..=1.0) * cfg.cop_jitter;
    HeatPumpStep { state: s, measured: s.power + noise, thermal: cfg.cop * s.power * (1.0 + jitter) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> HeatPumpConfig {
        HeatPumpConfig::from_params(&SystemParams::default())
    }

    fn warm(n: f64) -> HeatPumpState {
        HeatPumpState { n_set: n, n, power: cfg().power_at(n), on: true, seconds_on: 1e6 }
    }

    #[test]
    fn off_pump_draws_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = heat_pump_step(&cfg(), &HeatPumpState::default(), 0.0, 2.0, &mut rng);
        assert_eq!((s.measured, s.thermal, s.state.on), (0.0, 0.0, false));
    }

    #[test]
    fn steady_speed_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = heat_pump_step(&cfg(), &warm(35.0), 35.0, 2.0, &mut rng);
        assert!((s.state.power - 10.5).abs() < 1e-12);
        assert!((s.measured - 10.5).abs() <= 0.2);
        assert!((s.thermal / (3.53 * 10.5) - 1.0).abs() <= 0.02 + 1e-12);
    }

    #[test]
    fn speed_change_respects_ramp() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = warm(20.0);
        let mut t = 0.0;
        while s.n < 50.0 - 1e-9 && t < 200.0 {
            let prev = s.n;
            s = heat_pump_step(&cfg(), &s, 50.0, 0.5, &mut rng).state;
            assert!(s.n - prev <= 0.5 * 1.0 + 1e-12);
            t += 0.5;
        }
        assert!(t >= 30.0);
    }

    #[test]
    fn set_points_are_integers_within_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = heat_pump_step(&cfg(), &warm(30.0), 33.6, 2.0, &mut rng).state;
        assert_eq!(s.n_set, 34.0);
        let s = heat_pump_step(&cfg(), &warm(30.0), 80.0, 2.0, &mut rng).state;
        assert_eq!(s.n_set, 50.0);
        let s = heat_pump_step(&cfg(), &warm(30.0), 3.0, 2.0, &mut rng).state;
        assert_eq!(s.n_set, 20.0);
    }

    #[test]
    fn warmup_ignores_set_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut s = HeatPumpState::default();
        for _ in 0..75 {
            s = heat_pump_step(&cfg(), &s, 50.0, 2.0, &mut rng).state;
        }
        assert!((s.power - 8.2 * 150.0 / 300.0).abs() < 1e-12);
        for _ in 0..75 {
            s = heat_pump_step(&cfg(), &s, 50.0, 2.0, &mut rng).state;
        }
        assert!((s.power - 8.2).abs() < 1e-12);
        s = heat_pump_step(&cfg(), &s, 50.0, 2.0, &mut rng).state;
        assert!(s.n > 20.0 && s.n <= 22.0);
    }

    #[test]
    fn speed_map_inverts() {
        let c = cfg();
        for u in [8.2, 9.0, 12.8] {
            assert!((c.power_at(c.speed_for(u)) - u).abs() < 1e-12);
        }
    }
}

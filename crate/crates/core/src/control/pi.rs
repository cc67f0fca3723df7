use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PiConfig {
    /// Percent speed per kW of tracking error.
    pub kp: f64,
    /// Percent speed per kW of error summed over samples.
    pub ki: f64,
    pub n_min: f64,
    pub n_max: f64,
    /// Largest |n_set − n| (percent) at which the integrator still runs.
    pub gap: f64,
    /// Sample time, s.
    pub dt: f64,
}

impl Default for PiConfig {
    fn default() -> Self {
        PiConfig { kp: 2.0, ki: 0.4, n_min: 20.0, n_max: 50.0, gap: 2.0, dt: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiState {
    pub cfg: PiConfig,
    /// Sum of the errors of past samples, kW.
    pub acc: f64,
}

impl PiState {
    pub fn new(cfg: PiConfig) -> Self {
        PiState { cfg, acc: 0.0 }
    }

    /// Integrator preset so that a zero error reproduces speed `n`.
    pub fn bumpless(cfg: PiConfig, n: f64) -> Self {
        PiState { cfg, acc: if cfg.ki != 0.0 { n / cfg.ki } else { 0.0 } }
    }
}

/// One controller sample, `n_set = kp·e + ki·Σe`: returns the new state and the speed set point.
/// The integrator holds when the output saturates or the compressor lags
/// the current set point by more than `gap`.
pub fn pi_step(pi: &PiState, target: f64, measured: f64, n: f64) -> (PiState, f64) {
    let c = pi.cfg;
    let err = target - measured;
    let held = (c.kp * err + c.ki * pi.acc).clamp(c.n_min, c.n_max);
    let acc = pi.acc + err;
    let raw = c.kp * err + c.ki * acc;
    let saturated = raw < c.n_min || raw > c.n_max;
    if saturated || (held - n).abs() > c.gap {
        return (*pi, held);
    }
    (PiState { cfg: c, acc }, raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_error_clamps_to_floor() {
        let (_, n) = pi_step(&PiState::new(PiConfig::default()), 5.0, 5.0, 20.0);
        assert_eq!(n, 20.0);
    }

    #[test]
    fn saturation_freezes_integrator() {
        let mut s = PiState::bumpless(PiConfig::default(), 50.0);
        let acc = s.acc;
        for _ in 0..10 {
            let (next, n) = pi_step(&s, 13.0, 10.0, 50.0);
            assert_eq!(n, 50.0);
            s = next;
        }
        assert_eq!(s.acc, acc);
    }

    #[test]
    fn speed_gap_freezes_integrator() {
        let s = PiState::bumpless(PiConfig::default(), 30.0);
        let (next, _) = pi_step(&s, 10.5, 10.0, 25.0);
        assert_eq!(next.acc, s.acc);
        let (next, _) = pi_step(&s, 10.5, 10.0, 30.0);
        assert!(next.acc > s.acc);
    }

    #[test]
    fn bumpless_start_holds_speed() {
        let s = PiState::bumpless(PiConfig::default(), 33.0);
        assert!((pi_step(&s, 9.0, 9.0, 33.0).1 - 33.0).abs() < 1e-12);
    }
}

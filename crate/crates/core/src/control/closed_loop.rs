use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thermoreg_opt::MilpStatus;

use super::forecaster::{Forecaster, NetworkForecaster, PerfectForecaster};
use super::levels::{run_level1, run_level2, DayPlan, SolverSettings};
use super::pi::{pi_step, PiConfig, PiState};
use super::ControlError;
use crate::forecast::{TrainConfig, STEPS_PER_DAY, STEPS_PER_WEEK};
use crate::params::{average_tank_temperature, Checked, TankState};
use crate::plant::{gen_demand_profile, gen_regulation_signal, heat_pump_step, step_tank, DemandConfig, DemandScenario, HeatPumpConfig, HeatPumpState, RegSignal, SignalConfig, TankConfig, SAMPLE_PERIOD};
use crate::robust::{AffinePolicy, Hint};
use crate::scoring::{hourly_scores, rolling_qualification, SAMPLES_PER_HOUR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForecastMode {
    /// Trained network with error correction.
    Network,
    /// The true demand.
    Perfect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub days: usize,
    /// Days of demand history before the run; the network needs 14.
    pub history_days: usize,
    pub demand_seed: u64,
    pub signal_seed: u64,
    pub noise_seed: u64,
    pub forecast_seed: u64,
    pub demand: DemandConfig,
    pub signal: SignalConfig,
    /// Initial tank layers, top to bottom, °C (equal masses).
    pub initial_layers: Vec<f64>,
    pub offer_reserves: bool,
    pub forecast: ForecastMode,
    pub retrain: bool,
    pub solver: SolverSettings,
    pub pi: PiConfig,
    /// Lead of the scheduling solves and of the early switch-on, s.
    pub lead_secs: f64,
    /// Switch on early before every on step, not only before steps with
    /// reserves.
    pub early_on_always: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            days: 3,
            history_days: 14,
            demand_seed: 1,
            signal_seed: 2,
            noise_seed: 3,
            forecast_seed: 0,
            demand: DemandConfig::default(),
            signal: SignalConfig::default(),
            initial_layers: vec![32.0, 31.0, 30.0, 29.5, 29.0, 28.5],
            offer_reserves: true,
            forecast: ForecastMode::Network,
            retrain: true,
            solver: SolverSettings::default(),
            pi: PiConfig::default(),
            lead_secs: 300.0,
            early_on_always: false,
        }
    }
}

/// One 2-second sample; power values are means over the sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FastRow {
    pub t: f64,
    /// u⁰ + w·r, kW.
    pub target: f64,
    pub measured: f64,
    /// w·r, kW.
    pub regulation: f64,
    /// Reserve offered for the current step, kW.
    pub reserve: f64,
    pub w: f64,
    pub n: f64,
    pub n_set: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRow {
    pub day: usize,
    pub step: usize,
    pub u0: f64,
    pub r: f64,
    pub on: bool,
    /// Pump started during this step for the next one.
    pub early_on: bool,
    /// Level that produced u⁰ (1 or 2).
    pub level: u8,
    pub status: String,
    pub forecast_day_ahead: f64,
    pub forecast: f64,
    pub demand: f64,
    pub x_start: f64,
    pub x_end: f64,
    pub layer0: f64,
    pub layer1: f64,
    pub layer2: f64,
    pub layer3: f64,
    pub layer4: f64,
    pub layer5: f64,
    /// Planned temperature-bound slack at the end of the step, °C.
    pub slack: f64,
    pub mean_power: f64,
    pub mean_measured: f64,
    pub mean_thermal: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HourRow {
    pub hour: usize,
    pub reserves: f64,
    pub delay: Option<f64>,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub composite: Option<f64>,
    pub rolling: Option<f64>,
    pub qualified: Option<bool>,
    pub operational: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimulationLog {
    pub fast: Vec<FastRow>,
    pub steps: Vec<StepRow>,
    pub hours: Vec<HourRow>,
    pub plans: Vec<DayPlan>,
}

impl SimulationLog {
    fn score_hours(&mut self) {
        let target: Vec<f64> = self.fast.iter().map(|f| f.target).collect();
        let measured: Vec<f64> = self.fast.iter().map(|f| f.measured).collect();
        let reg: Vec<f64> = self.fast.iter().map(|f| f.regulation).collect();
        let reserve: Vec<f64> = self.fast.iter().map(|f| f.reserve).collect();
        let scores = hourly_scores(&target, &measured, &reg, &reserve);
        let rolling = rolling_qualification(&scores.iter().map(|s| s.map(|s| s.composite)).collect::<Vec<_>>());
        let steps_per_hour = self.steps.len() / scores.len().max(1);
        self.hours = scores
            .iter()
            .enumerate()
            .map(|(hour, s)| {
                let roll = rolling.iter().find(|p| p.hour == hour);
                let hour_steps = &self.steps[hour * steps_per_hour..((hour + 1) * steps_per_hour).min(self.steps.len())];
                HourRow {
                    hour,
                    reserves: hour_steps.iter().map(|s| s.r).sum::<f64>() / hour_steps.len().max(1) as f64,
                    delay: s.map(|s| s.delay),
                    accuracy: s.map(|s| s.accuracy),
                    precision: s.map(|s| s.precision),
                    composite: s.map(|s| s.composite),
                    rolling: roll.map(|p| p.average),
                    qualified: roll.map(|p| p.qualified),
                    operational: roll.map(|p| p.operational),
                }
            })
            .collect();
    }
}

/// A run that stopped early, with everything logged up to the failure.
#[derive(Debug)]
pub struct RunFailure {
    pub error: ControlError,
    pub partial: Box<SimulationLog>,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "run aborted after {} steps: {}", self.partial.steps.len(), self.error)
    }
}

impl std::error::Error for RunFailure {}

/// Runs the whole hierarchy over `cfg.days` days. Level 1 plans each day,
/// Level 2 re-plans every following step `lead_secs` ahead of it, and the
/// PI loop tracks u⁰ + w·r every `pi.dt` seconds.
pub fn run_closed_loop(checked: &Checked, cfg: &ScenarioConfig) -> Result<SimulationLog, RunFailure> {
    let mut log = SimulationLog::default();
    let res = Loop::new(checked, cfg).and_then(|mut l| l.run(&mut log));
    log.score_hours();
    match res {
        Ok(()) => Ok(log),
        Err(error) => Err(RunFailure { error, partial: Box::new(log) }),
    }
}

#[derive(Debug, Clone)]
struct Decision {
    u0: f64,
    r: f64,
    on: bool,
    slack: f64,
    level: u8,
    status: MilpStatus,
    forecast: f64,
    policy: AffinePolicy,
    /// Run step of the policy's first entry.
    policy_start: usize,
}

struct Loop<'a> {
    checked: &'a Checked,
    cfg: &'a ScenarioConfig,
    start: usize,
    demand: DemandScenario,
    signal: RegSignal,
    forecaster: Box<dyn Forecaster>,
    plan: Option<DayPlan>,
}

fn scenario_error(s: impl Into<String>) -> ControlError {
    ControlError::Scenario(s.into())
}

impl<'a> Loop<'a> {
    fn new(checked: &'a Checked, cfg: &'a ScenarioConfig) -> Result<Self, ControlError> {
        let p = &checked.params;
        if cfg.days == 0 {
            return Err(scenario_error("days must be at least 1"));
        }
        if p.horizon_steps != STEPS_PER_DAY || p.step_length as usize * STEPS_PER_DAY != 86_400 {
            return Err(scenario_error("closed-loop runs need 96 steps of 15 minutes per day"));
        }
        if cfg.initial_layers.len() != TankState::LAYERS {
            return Err(scenario_error(format!("expected {} initial layers", TankState::LAYERS)));
        }
        TankState::with_uniform_weights(cfg.initial_layers.clone()).validate()?;
        let ticks = SAMPLE_PERIOD as f64 / cfg.pi.dt;
        if cfg.pi.dt <= 0.0 || (ticks - ticks.round()).abs() > 1e-9 {
            return Err(scenario_error("controller sample time must divide the 2 s signal period"));
        }
        if !(0.0..p.step_length as f64).contains(&cfg.lead_secs) {
            return Err(scenario_error("lead must be shorter than a step"));
        }
        let need_history = if cfg.forecast == ForecastMode::Network { 2 * STEPS_PER_WEEK / STEPS_PER_DAY } else { 0 };
        if cfg.history_days < need_history {
            return Err(scenario_error(format!("the network forecaster needs {need_history} days of history")));
        }
        let demand = gen_demand_profile(cfg.demand_seed, cfg.history_days + cfg.days, &DemandConfig { step_length: p.step_length, ..cfg.demand });
        let start = cfg.history_days * STEPS_PER_DAY;
        let forecaster: Box<dyn Forecaster> = match cfg.forecast {
            ForecastMode::Perfect => Box::new(PerfectForecaster { demand: demand.demand.clone() }),
            ForecastMode::Network => {
                let train = TrainConfig { seed: cfg.forecast_seed, ..TrainConfig::default() };
                Box::new(NetworkForecaster::train(demand.to_records(), start, train, cfg.retrain)?)
            }
        };
        let signal = gen_regulation_signal(cfg.signal_seed, (cfg.days * 86_400) as u32, &SignalConfig { step_length: p.step_length, ..cfg.signal })?;
        Ok(Loop { checked, cfg, start, demand, signal, forecaster, plan: None })
    }

    /// Schedules run step `k` from the predicted average temperature `x`.
    fn decide(&mut self, k: usize, x: f64, prev: Option<&Decision>, log: &mut SimulationLog) -> Result<Decision, ControlError> {
        let abs = self.start + k;
        let s = k % STEPS_PER_DAY;
        if s == 0 {
            if k > 0 {
                self.forecaster.end_of_day(abs)?;
            }
            let f = self.forecaster.forecast(abs, abs + STEPS_PER_DAY)?;
            let plan = run_level1(self.checked, k / STEPS_PER_DAY, x, f, &self.cfg.solver, self.cfg.offer_reserves)?;
            let pol = &plan.policy;
            let d = Decision {
                u0: pol.base[0],
                r: plan.reserves[0],
                on: pol.on[0],
                slack: pol.slack[0],
                level: 1,
                status: plan.status,
                forecast: plan.forecast[0],
                policy: pol.clone(),
                policy_start: k,
            };
            log.plans.push(plan.clone());
            self.plan = Some(plan);
            return Ok(d);
        }
        let f = self.forecaster.forecast(abs, abs + STEPS_PER_DAY - s)?;
        let plan = self.plan.as_ref().expect("a day plan precedes intra-day steps");
        let rest = STEPS_PER_DAY - s;
        let always_on = Hint { on: vec![true; rest], reserve_flag: plan.reserves[s..].iter().map(|&r| r > 0.0).collect() };
        let mut hints = vec![Hint::from_policy(&plan.policy).tail(s), always_on];
        if let Some(p) = prev {
            hints.insert(0, Hint::from_policy(&p.policy).tail(k - p.policy_start));
        }
        let forecast = f[0];
        let d = run_level2(self.checked, s + 1, x, f, plan, prev.map(|p| p.on), &hints, &self.cfg.solver)?;
        Ok(Decision {
            u0: d.base(),
            r: plan.reserves[s],
            on: d.on(),
            slack: d.slack(),
            level: 2,
            status: d.status,
            forecast,
            policy: d.policy,
            policy_start: k,
        })
    }

    fn run(&mut self, log: &mut SimulationLog) -> Result<(), ControlError> {
        let p = self.checked.params.clone();
        let cfg = self.cfg;
        let dt = cfg.pi.dt;
        let total = cfg.days * STEPS_PER_DAY;
        let ticks_per_step = (p.step_length as f64 / dt).round() as usize;
        let ticks_per_sample = (SAMPLE_PERIOD as f64 / dt).round() as usize;
        let lead_tick = ticks_per_step - (cfg.lead_secs / dt).round() as usize;
        // kW·s per kelvin of average tank temperature
        let capacity = p.water_mass * p.specific_heat / 1000.0;
        let hp_cfg = HeatPumpConfig::from_params(&p);
        let tank_cfg = TankConfig::from(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.noise_seed);
        let mut tank = TankState::with_uniform_weights(cfg.initial_layers.clone());
        let avg = |t: &TankState| average_tank_temperature(t).expect("layer counts match");

        let mut cur = self.decide(0, avg(&tank), None, log)?;
        let mut hp = HeatPumpState::default();
        if cur.on {
            let n = hp_cfg.speed_for(cur.u0).round().clamp(hp_cfg.n_low, hp_cfg.n_high);
            hp = HeatPumpState { n_set: n, n, power: hp_cfg.power_at(n), on: true, seconds_on: hp_cfg.warmup + 1.0 };
        }
        let mut pi = PiState::bumpless(cfg.pi, hp.n);
        let mut was_tracking = hp.on;
        let mut measured_prev = hp.power;

        for k in 0..total {
            let abs = self.start + k;
            let v_true = self.demand.demand[abs];
            let x_start = avg(&tank);
            let mut next: Option<Decision> = None;
            let mut early = false;
            let (mut sum_power, mut sum_meas, mut sum_th) = (0.0, 0.0, 0.0);
            let (mut win_target, mut win_meas) = (0.0, 0.0);
            for tick in 0..ticks_per_step {
                if tick == lead_tick && k + 1 < total {
                    let left = (ticks_per_step - tick) as f64 * dt;
                    let u_nom = if cur.on { cur.u0 } else { 0.0 };
                    let x_hat = avg(&tank) + left / capacity * (p.cop * u_nom - cur.forecast);
                    let d = self.decide(k + 1, x_hat, Some(&cur), log)?;
                    early = d.on && (d.r > 0.0 || cfg.early_on_always) && !cur.on;
                    next = Some(d);
                }
                let time = (k * ticks_per_step + tick) as f64 * dt;
                let w = self.signal.at(time);
                let (target, reg) = if cur.on { (cur.u0 + w * cur.r, w * cur.r) } else { (0.0, 0.0) };
                let tracking = hp.on && !hp.warming_up(&hp_cfg);
                let n_set = if !(cur.on || early) {
                    0.0
                } else if tracking {
                    if !was_tracking {
                        pi = PiState::bumpless(cfg.pi, hp.n);
                    }
                    let (np, ns) = pi_step(&pi, target, measured_prev, hp.n);
                    pi = np;
                    ns
                } else {
                    hp_cfg.n_low
                };
                was_tracking = tracking && n_set > 0.0;
                let st = heat_pump_step(&hp_cfg, &hp, n_set, dt, &mut rng);
                hp = st.state;
                tank = step_tank(&tank, st.thermal, v_true, dt, &tank_cfg);
                measured_prev = st.measured;
                sum_power += hp.power;
                sum_meas += st.measured;
                sum_th += st.thermal;
                win_target += target;
                win_meas += st.measured;
                if (tick + 1) % ticks_per_sample == 0 {
                    let m = ticks_per_sample as f64;
                    log.fast.push(FastRow {
                        t: time + dt - SAMPLE_PERIOD as f64,
                        target: win_target / m,
                        measured: win_meas / m,
                        regulation: reg,
                        reserve: if cur.on { cur.r } else { 0.0 },
                        w,
                        n: hp.n,
                        n_set: hp.n_set,
                    });
                    win_target = 0.0;
                    win_meas = 0.0;
                }
            }
            let plan = self.plan.as_ref().expect("plan exists");
            let fa = plan.forecast[k % STEPS_PER_DAY];
            let m = ticks_per_step as f64;
            let l = &tank.layer_temps;
            log.steps.push(StepRow {
                day: k / STEPS_PER_DAY,
                step: k % STEPS_PER_DAY,
                u0: cur.u0,
                r: cur.r,
                on: cur.on,
                early_on: early,
                level: cur.level,
                status: format!("{:?}", cur.status),
                forecast_day_ahead: fa,
                forecast: cur.forecast,
                demand: v_true,
                x_start,
                x_end: avg(&tank),
                layer0: l[0],
                layer1: l[1],
                layer2: l[2],
                layer3: l[3],
                layer4: l[4],
                layer5: l[5],
                slack: cur.slack,
                mean_power: sum_power / m,
                mean_measured: sum_meas / m,
                mean_thermal: sum_th / m,
            });
            if let Some(d) = next {
                cur = d;
            }
        }
        Ok(())
    }
}

/// Samples per hour must line up with the hourly score windows.
const _: () = assert!(SAMPLES_PER_HOUR as u32 * SAMPLE_PERIOD == 3600);

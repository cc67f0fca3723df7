//! Plant, cost and uncertainty constants and the discrete storage model.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("{0} violated")]
    Invariant(&'static str),
    #[error("layer temperatures ({temps}) and weights ({weights}) differ in length")]
    LayerMismatch { temps: usize, weights: usize },
    #[error("config: {0}")]
    Config(String),
}

/// Closed interval `[lo, hi]`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };

    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn symmetric(h: f64) -> Self {
        Interval { lo: -h, hi: h }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }
}

impl From<[f64; 2]> for Interval {
    fn from(a: [f64; 2]) -> Self {
        Interval { lo: a[0], hi: a[1] }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    #[serde(rename = "N")]
    pub horizon_steps: usize,
    /// Seconds per scheduling step.
    pub step_length: u32,
    #[serde(rename = "alpha_COP")]
    pub cop: f64,
    /// Water mass in kg.
    #[serde(rename = "m")]
    pub water_mass: f64,
    /// J/(kg K).
    #[serde(rename = "c_p")]
    pub specific_heat: f64,
    #[serde(rename = "X_min")]
    pub x_min: f64,
    #[serde(rename = "X_max")]
    pub x_max: f64,
    #[serde(rename = "U_min")]
    pub u_min: f64,
    #[serde(rename = "U_max")]
    pub u_max: f64,
    #[serde(rename = "R_min")]
    pub r_min: f64,
    #[serde(rename = "R_max")]
    pub r_max: f64,
    #[serde(rename = "f_el")]
    pub cost_el: f64,
    #[serde(rename = "f_r")]
    pub benefit_res: f64,
    /// Cost per degree of temperature-bound slack per step.
    pub lambda: f64,
    /// Consecutive steps over which the on/off flag is held constant.
    pub hp_block_steps: usize,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            horizon_steps: 96,
            step_length: 900,
            cop: 3.53,
            water_mass: 2200.0,
            specific_heat: 4186.0,
            x_min: 28.0,
            x_max: 38.0,
            u_min: 8.2,
            u_max: 12.8,
            r_min: 0.4,
            r_max: 2.3,
            cost_el: 1.0,
            benefit_res: 1.5,
            lambda: 5.0,
            hp_block_steps: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySets {
    /// Instantaneous regulation signal.
    #[serde(rename = "W")]
    pub w: Interval,
    /// Interval mean of the regulation signal.
    #[serde(rename = "W_bar")]
    pub wbar: Interval,
    /// Joint heat-pump and forecast error, kW thermal.
    #[serde(rename = "E_Delta")]
    pub de: Interval,
}

impl Default for UncertaintySets {
    fn default() -> Self {
        UncertaintySets {
            w: Interval::new(-1.0, 1.0),
            wbar: Interval::new(-0.25, 0.25),
            de: Interval::new(-4.0, 4.0),
        }
    }
}

impl UncertaintySets {
    pub fn none() -> Self {
        UncertaintySets { w: Interval::ZERO, wbar: Interval::ZERO, de: Interval::ZERO }
    }
}

/// Validated parameter bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct Checked {
    pub params: SystemParams,
    pub sets: UncertaintySets,
}

fn ensure(cond: bool, what: &'static str) -> Result<(), ParamError> {
    if cond {
        Ok(())
    } else {
        Err(ParamError::Invariant(what))
    }
}

pub fn validate_params(p: SystemParams, u: UncertaintySets) -> Result<Checked, ParamError> {
    let finite = [
        p.cop, p.water_mass, p.specific_heat, p.x_min, p.x_max, p.u_min, p.u_max, p.r_min, p.r_max,
        p.cost_el, p.benefit_res, p.lambda,
    ]
    .iter()
    .all(|v| v.is_finite());
    ensure(finite, "finite parameters")?;
    ensure(p.horizon_steps >= 1, "N >= 1")?;
    ensure(p.step_length > 0, "step_length > 0")?;
    ensure(p.hp_block_steps >= 1, "hp_block_steps >= 1")?;
    ensure(p.x_min < p.x_max, "X_min < X_max")?;
    ensure(0.0 < p.u_min && p.u_min < p.u_max, "0 < U_min < U_max")?;
    ensure(0.0 <= p.r_min && p.r_min <= p.r_max, "0 <= R_min <= R_max")?;
    ensure(p.u_min + p.r_max <= p.u_max - p.r_max + 1e-12, "U_min + R_max <= U_max - R_max")?;
    ensure(p.cop > 0.0 && p.water_mass > 0.0 && p.specific_heat > 0.0, "positive mass, heat and COP")?;
    ensure(p.cost_el > 0.0 && p.benefit_res > 0.0 && p.lambda > 0.0, "positive costs")?;
    ensure(u.w.is_valid() && u.wbar.is_valid() && u.de.is_valid(), "nonempty uncertainty intervals")?;
    ensure(u.w.is_subset_of(&Interval::new(-1.0, 1.0)), "W within [-1, 1]")?;
    ensure(u.wbar.is_subset_of(&u.w), "W̄ ⊆ W")?;
    Ok(Checked { params: p, sets: u })
}

/// `x_{k+1} = Ã x_k + B̃ (u_th − v + δ + e)` with powers in kW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteModel {
    pub a_tilde: f64,
    pub b_tilde: f64,
}

pub fn discretize(p: &SystemParams) -> DiscreteModel {
    DiscreteModel { a_tilde: 1.0, b_tilde: p.step_length as f64 * 1000.0 / (p.water_mass * p.specific_heat) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TankState {
    /// Top to bottom, °C.
    pub layer_temps: Vec<f64>,
    pub layer_weights: Vec<f64>,
}

impl TankState {
    pub const LAYERS: usize = 6;

    pub fn uniform(temp: f64) -> Self {
        Self::with_uniform_weights(vec![temp; Self::LAYERS])
    }

    pub fn with_uniform_weights(layer_temps: Vec<f64>) -> Self {
        let n = layer_temps.len();
        TankState { layer_temps, layer_weights: vec![1.0 / n as f64; n] }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if self.layer_temps.len() != self.layer_weights.len() {
            return Err(ParamError::LayerMismatch { temps: self.layer_temps.len(), weights: self.layer_weights.len() });
        }
        ensure(self.layer_weights.iter().all(|&w| w >= 0.0), "nonnegative layer weights")?;
        ensure((self.layer_weights.iter().sum::<f64>() - 1.0).abs() <= 1e-9, "layer weights sum to 1")?;
        ensure(self.layer_temps.windows(2).all(|t| t[0] >= t[1] - 1e-9), "layer order (top >= bottom)")
    }

    pub fn top(&self) -> f64 {
        self.layer_temps[0]
    }

    pub fn bottom(&self) -> f64 {
        *self.layer_temps.last().unwrap()
    }
}

pub fn average_tank_temperature(s: &TankState) -> Result<f64, ParamError> {
    if s.layer_temps.len() != s.layer_weights.len() {
        return Err(ParamError::LayerMismatch { temps: s.layer_temps.len(), weights: s.layer_weights.len() });
    }
    Ok(s.layer_temps.iter().zip(&s.layer_weights).map(|(t, w)| t * w).sum())
}

/// Parameter file contents: Table-style symbols at the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ParamFile {
    #[serde(flatten)]
    pub params: SystemParams,
    #[serde(flatten)]
    pub sets: UncertaintySets,
}

impl ParamFile {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("parameters serialize")
    }

    pub fn from_toml(text: &str) -> Result<Self, ParamError> {
        toml::from_str(text).map_err(|e| ParamError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ParamError> {
        let text = std::fs::read_to_string(path).map_err(|e| ParamError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn checked(self) -> Result<Checked, ParamError> {
        validate_params(self.params, self.sets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        assert!(validate_params(SystemParams::default(), UncertaintySets::default()).is_ok());
    }

    #[test]
    fn inverted_temperature_band() {
        let p = SystemParams { x_min: 40.0, x_max: 38.0, ..Default::default() };
        let err = validate_params(p, UncertaintySets::default()).unwrap_err();
        assert_eq!(err.to_string(), "X_min < X_max violated");
    }

    #[test]
    fn wbar_must_sit_inside_w() {
        let u = UncertaintySets { w: Interval::symmetric(0.25), wbar: Interval::symmetric(0.5), ..Default::default() };
        let err = validate_params(SystemParams::default(), u).unwrap_err();
        assert_eq!(err.to_string(), "W̄ ⊆ W violated");
    }

    #[test]
    fn reserve_band_must_fit() {
        let p = SystemParams { r_max: 2.4, ..Default::default() };
        assert!(validate_params(p, UncertaintySets::default()).is_err());
    }

    #[test]
    fn b_tilde_values() {
        let d = discretize(&SystemParams::default());
        assert_eq!(d.a_tilde, 1.0);
        // 900 s / (2200 kg · 4186 J/(kg K)) = 0.09773 K/kW, listed as 0.0978
        assert!((d.b_tilde - 0.0978).abs() / 0.0978 < 1e-3);
        let small = discretize(&SystemParams { water_mass: 1000.0, ..Default::default() });
        assert!((small.b_tilde - 900.0 / (1000.0 * 4186.0) * 1000.0).abs() < 1e-12);
        assert!((small.b_tilde - 0.2150).abs() < 5e-5);
        let double = discretize(&SystemParams { water_mass: 4400.0, ..Default::default() });
        assert!((double.b_tilde * 2.0 - d.b_tilde).abs() < 1e-12);
    }

    #[test]
    fn averages() {
        assert_eq!(average_tank_temperature(&TankState::uniform(30.0)).unwrap(), 30.0);
        let s = TankState::with_uniform_weights(vec![38.0, 36.0, 34.0, 32.0, 30.0, 28.0]);
        assert!((average_tank_temperature(&s).unwrap() - 33.0).abs() < 1e-12);
        let s = TankState { layer_temps: vec![38.0, 28.0], layer_weights: vec![0.25, 0.75] };
        assert!((average_tank_temperature(&s).unwrap() - 30.5).abs() < 1e-12);
        let bad = TankState { layer_temps: vec![1.0], layer_weights: vec![0.5, 0.5] };
        assert!(average_tank_temperature(&bad).is_err());
    }

    #[test]
    fn toml_round_trip_is_bit_exact() {
        let f = ParamFile::default();
        let text = f.to_toml();
        assert!(text.contains("alpha_COP = 3.53"));
        assert!(text.contains("W_bar = [-0.25, 0.25]"));
        let back = ParamFile::from_toml(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn unknown_keys_are_reported() {
        let mut text = ParamFile::default().to_toml();
        text = text.replace("X_min", "X_minimum");
        assert!(ParamFile::from_toml(&text).is_err());
    }
}

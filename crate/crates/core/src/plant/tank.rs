use crate::params::{SystemParams, TankState};

/// Physical constants the layered tank needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TankConfig {
    /// Total water mass, kg.
    pub mass: f64,
    /// J/(kg·K).
    pub specific_heat: f64,
    /// Return temperature of the building circuit, °C.
    pub x_min: f64,
    /// Supply temperature of the heat pump, °C.
    pub x_max: f64,
}

impl From<&SystemParams> for TankConfig {
    fn from(p: &SystemParams) -> Self {
        TankConfig { mass: p.water_mass, specific_heat: p.specific_heat, x_min: p.x_min, x_max: p.x_max }
    }
}

/// Moves `q` kg through the stack: `downward` inserts at the top and
/// removes from the bottom, otherwise the reverse. Requires `q` no larger
/// than any layer.
fn shift(temps: &mut [f64], masses: &[f64], q: f64, inflow: f64, downward: bool) {
    let n = temps.len();
    let old = temps.to_vec();
    for i in 0..n {
        let (src, m) = if downward {
            (if i == 0 { inflow } else { old[i - 1] }, masses[i])
        } else {
            (if i + 1 == n { inflow } else { old[i + 1] }, masses[i])
        };
        temps[i] = ((m - q) * old[i] + q * src) / m;
    }
}

/// Plug-flow update of the layered tank over `dt` seconds.
///
/// The heat pump draws from the bottom and delivers `u_th` kW at the top at
/// its supply temperature; the building draws `v_true` kW from the top and
/// returns water to the bottom. Layer masses are `weight · mass`.
pub fn step_tank(state: &TankState, u_th: f64, v_true: f64, dt: f64, cfg: &TankConfig) -> TankState {
    assert!(dt > 0.0, "time step must be positive");
    let mut out = state.clone();
    let masses: Vec<f64> = state.layer_weights.iter().map(|w| w * cfg.mass).collect();
    let m_min = masses.iter().copied().fold(f64::INFINITY, f64::min);
    let cp = cfg.specific_heat;
    // supply and return temperatures differ from the adjacent layer by ≥ 1 K,
    // which bounds the mass moved per unit of energy
    let worst_q = u_th.max(v_true).max(0.0) * dt * 1000.0 / cp;
    let substeps = ((worst_q / (0.5 * m_min)).ceil() as usize).max(1);
    let h = dt / substeps as f64;
    for _ in 0..substeps {
        let t = &mut out.layer_temps;
        let (top, bottom) = (t[0], t[t.len() - 1]);
        if u_th > 0.0 {
            let supply = cfg.x_max.max(top).max(bottom + 1.0);
            let q = u_th * h * 1000.0 / (cp * (supply - bottom));
            shift(t, &masses, q, supply, true);
        }
        let (top, bottom) = (t[0], t[t.len() - 1]);
        if v_true > 0.0 {
            let ret = cfg.x_min.min(bottom).min(top - 1.0);
            let q = v_true * h * 1000.0 / (cp * (top - ret));
            shift(t, &masses, q, ret, false);
        }
    }
    out
}

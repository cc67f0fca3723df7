use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::PlantError;
use crate::params::Interval;

/// Seconds between regulation-signal samples.
pub const SAMPLE_PERIOD: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalSource {
    Synthetic,
    File,
    Zero,
}

/// Regulation signal sampled every [`SAMPLE_PERIOD`] seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct RegSignal {
    pub samples: Vec<f64>,
    pub source: SignalSource,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl RegSignal {
    pub fn zero(duration: u32) -> Self {
        RegSignal { samples: vec![0.0; (duration / SAMPLE_PERIOD) as usize], source: SignalSource::Zero }
    }

    pub fn duration(&self) -> u32 {
        self.samples.len() as u32 * SAMPLE_PERIOD
    }

    /// Sample in force at time `t` seconds (zero-order hold).
    pub fn at(&self, t: f64) -> f64 {
        let i = (t / SAMPLE_PERIOD as f64).floor() as usize;
        self.samples[i.min(self.samples.len() - 1)]
    }
}

/// Mean, minimum and maximum over step `k` of length `step_length` seconds.
pub fn interval_stats(sig: &RegSignal, k: usize, step_length: u32) -> Result<IntervalStats, PlantError> {
    let per = (step_length / SAMPLE_PERIOD) as usize;
    let s = sig.samples.get(k * per..(k + 1) * per).ok_or(PlantError::IntervalOutOfRange(k))?;
    Ok(IntervalStats {
        mean: s.iter().sum::<f64>() / per as f64,
        min: s.iter().copied().fold(f64::INFINITY, f64::min),
        max: s.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalConfig {
    /// Time constant of each low-pass stage of the fast component, s.
    pub fast_tau: f64,
    /// Stationary standard deviation of the fast component.
    pub fast_std: f64,
    /// Standard deviation of the per-interval offset.
    pub slow_std: f64,
    /// Correlation of consecutive interval offsets.
    pub slow_corr: f64,
    /// Box every interval mean is pushed into.
    pub wbar: Interval,
    pub step_length: u32,
}

impl Default for SignalConfig {
    fn default() -> Self {
        SignalConfig { fast_tau: 30.0, fast_std: 0.45, slow_std: 0.1, slow_corr: 0.5, wbar: Interval::symmetric(0.25), step_length: 900 }
    }
}

/// Moves the interval mean into `bounds`: shift-and-clip first, shrinking
/// towards zero as a fallback (which keeps every sample inside [−1, 1]).
fn recentre(s: &mut [f64], bounds: Interval) {
    let n = s.len() as f64;
    let (lo, hi) = (bounds.lo + 1e-12, bounds.hi - 1e-12);
    for _ in 0..50 {
        let m = s.iter().sum::<f64>() / n;
        if (lo..=hi).contains(&m) {
            return;
        }
        let d = m.clamp(lo, hi) - m;
        for v in s.iter_mut() {
            *v = (*v + d).clamp(-1.0, 1.0);
        }
    }
    let m = s.iter().sum::<f64>() / n;
    if !(lo..=hi).contains(&m) {
        let f = m.clamp(lo, hi) / m;
        for v in s.iter_mut() {
            *v *= f;
        }
    }
}

/// Synthetic RegD-like signal: Gaussian noise through two first-order
/// low-pass stages on top of a slowly varying per-interval offset, clipped to [−1, 1] with every
/// interval mean kept inside the configured box.
pub fn gen_regulation_signal(seed: u64, duration: u32, cfg: &SignalConfig) -> Result<RegSignal, PlantError> {
    if duration % cfg.step_length != 0 || cfg.step_length % SAMPLE_PERIOD != 0 {
        return Err(PlantError::Duration(duration));
    }
    let per = (cfg.step_length / SAMPLE_PERIOD) as usize;
    let steps = (duration / cfg.step_length) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = (-(SAMPLE_PERIOD as f64) / cfg.fast_tau).exp();
    let b = cfg.fast_std * (1.0 - a * a).sqrt();
    let slow_b = cfg.slow_std * (1.0 - cfg.slow_corr * cfg.slow_corr).sqrt();
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    // the second low-pass stage shrinks the variance by (1 + a²)/(1 + a)²
    let gain = (1.0 + a) / (1.0 + a * a).sqrt();
    let mut fast = cfg.fast_std * normal();
    let mut smooth = fast / gain;
    let mut slow = cfg.slow_std * normal();
    let mut samples = Vec::with_capacity(steps * per);
    for _ in 0..steps {
        slow = cfg.slow_corr * slow + slow_b * normal();
        let start = samples.len();
        for _ in 0..per {
            fast = a * fast + b * normal();
            smooth = a * smooth + (1.0 - a) * fast;
            samples.push((slow + gain * smooth).clamp(-1.0, 1.0));
        }
        recentre(&mut samples[start..], cfg.wbar);
    }
    Ok(RegSignal { samples, source: SignalSource::Synthetic })
}

/// Reads `timestamp,value` rows (timestamps in seconds, optional header).
pub fn load_regulation_csv(path: &Path) -> Result<RegSignal, PlantError> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_path(path)?;
    let mut samples = Vec::new();
    let mut last_t: Option<f64> = None;
    for (i, rec) in rd.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        if rec.len() != 2 {
            return Err(PlantError::Malformed { row, reason: format!("expected 2 columns, found {}", rec.len()) });
        }
        let (t, v) = match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(t), Ok(v)) => (t, v),
            _ if row == 1 => continue,
            _ => return Err(PlantError::Malformed { row, reason: "non-numeric field".into() }),
        };
        if !(-1.0..=1.0).contains(&v) {
            return Err(PlantError::Range { row, value: v });
        }
        if let Some(prev) = last_t {
            if ((t - prev) - SAMPLE_PERIOD as f64).abs() > 1e-6 {
                return Err(PlantError::Cadence { row, gap: t - prev });
            }
        }
        last_t = Some(t);
        samples.push(v);
    }
    Ok(RegSignal { samples, source: SignalSource::File })
}

//! Tracking-quality scores modelled on the TSO's published verbal
//! definitions, and flexibility accounting.
//!
//! The exact TSO macro is not public, so the sub-scores are an
//! approximation: delay from the best cross-correlation lag within five
//! minutes, accuracy from the best correlation over those lags, precision
//! from the mean absolute error relative to the mean regulation component.

use serde::Serialize;

/// Samples per hour at the 2-second signal cadence.
pub const SAMPLES_PER_HOUR: usize = 1800;
/// Largest lag considered, in 2-second samples (five minutes).
pub const MAX_LAG: usize = 150;
pub const QUALIFICATION_LIMIT: f64 = 0.75;
pub const OPERATION_LIMIT: f64 = 0.4;
pub const ROLLING_HOURS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Score {
    pub delay: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub composite: f64,
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    let tiny = 1e-12 * n;
    match (saa <= tiny, sbb <= tiny) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => sab / (saa * sbb).sqrt(),
    }
}

/// Scores one window of aligned 2-second samples. `regulation` is the
/// signal-driven part of the target (w·r); a window in which it is zero
/// throughout carries no score.
pub fn composite_score(target: &[f64], measured: &[f64], regulation: &[f64]) -> Option<Score> {
    assert!(target.len() == measured.len() && target.len() == regulation.len(), "series must be aligned");
    let reg_mag = regulation.iter().map(|v| v.abs()).sum::<f64>() / regulation.len().max(1) as f64;
    if reg_mag == 0.0 {
        return None;
    }
    let n = target.len();
    let mut best = (f64::NEG_INFINITY, 0);
    for lag in 0..=MAX_LAG.min(n.saturating_sub(2)) {
        let c = correlation(&target[..n - lag], &measured[lag..]);
        if c > best.0 + 1e-12 {
            best = (c, lag);
        }
    }
    let delay = (1.0 - best.1 as f64 / MAX_LAG as f64).clamp(0.0, 1.0);
    let accuracy = best.0.max(0.0);
    let mae = target.iter().zip(measured).map(|(t, m)| (m - t).abs()).sum::<f64>() / n as f64;
    let precision = (1.0 - mae / reg_mag).clamp(0.0, 1.0);
    Some(Score { delay, accuracy, precision, composite: (delay + accuracy + precision) / 3.0 })
}

/// Scores every full hour of the series over the samples with reserves
/// offered (`reserve > 0`); hours without such samples carry no score.
pub fn hourly_scores(target: &[f64], measured: &[f64], regulation: &[f64], reserve: &[f64]) -> Vec<Option<Score>> {
    (0..target.len() / SAMPLES_PER_HOUR)
        .map(|h| {
            let idx: Vec<usize> = (h * SAMPLES_PER_HOUR..(h + 1) * SAMPLES_PER_HOUR).filter(|&i| reserve[i] > 0.0).collect();
            if idx.len() < 2 {
                return None;
            }
            let pick = |s: &[f64]| idx.iter().map(|&i| s[i]).collect::<Vec<f64>>();
            composite_score(&pick(target), &pick(measured), &pick(regulation))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RollingPoint {
    pub hour: usize,
    /// Mean composite over the most recent scored hours (at most 20).
    pub average: f64,
    pub qualified: bool,
    pub operational: bool,
}

/// Moving average over scored hours only; unscored hours produce no point.
pub fn rolling_qualification(composites: &[Option<f64>]) -> Vec<RollingPoint> {
    let mut window = std::collections::VecDeque::with_capacity(ROLLING_HOURS);
    let mut out = Vec::new();
    for (hour, c) in composites.iter().enumerate() {
        let Some(c) = *c else { continue };
        if window.len() == ROLLING_HOURS {
            window.pop_front();
        }
        window.push_back(c);
        let average = window.iter().sum::<f64>() / window.len() as f64;
        out.push(RollingPoint { hour, average, qualified: average >= QUALIFICATION_LIMIT, operational: average >= OPERATION_LIMIT });
    }
    out
}

/// Reserves offered over electricity consumed: Σ r_k / Σ mean(û_k). Zero
/// consumption gives 0.
pub fn flexibility_share(reserves: &[f64], mean_power: &[f64]) -> f64 {
    let used: f64 = mean_power.iter().sum();
    if used <= 0.0 {
        return 0.0;
    }
    reserves.iter().sum::<f64>() / used
}

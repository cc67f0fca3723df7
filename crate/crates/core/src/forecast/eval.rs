//! Forecast quality studies: the error-correction Monte Carlo and a
//! day-by-day replay of the full forecasting pipeline.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{correct_forecast, examples, retrain_online, train_mlp, DemandRecord, ForecastError, ForecastErrorStore, MlpModel, TrainConfig, STEPS_PER_DAY, STEPS_PER_WEEK};

/// One-step error process of a hypothetical base forecaster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorProcess {
    Ar1 { coeff: f64, std: f64 },
    White { std: f64 },
}

impl ErrorProcess {
    fn coeff(&self) -> f64 {
        match *self {
            ErrorProcess::Ar1 { coeff, .. } => coeff,
            ErrorProcess::White { .. } => 0.0,
        }
    }

    fn std(&self) -> f64 {
        match *self {
            ErrorProcess::Ar1 { std, .. } | ErrorProcess::White { std } => std,
        }
    }

    /// `n` consecutive errors, started from the stationary distribution.
    fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let (a, s) = (self.coeff(), self.std());
        let b = s * (1.0 - a * a).sqrt();
        let z0: f64 = StandardNormal.sample(rng);
        let mut e = s * z0;
        (0..n)
            .map(|_| {
                let out = e;
                let z: f64 = StandardNormal.sample(rng);
                e = a * e + b * z;
                out
            })
            .collect()
    }
}

/// Per-lead RMSE of raw and corrected forecasts; index 0 is one step ahead.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectionStudy {
    pub raw_rmse: Vec<f64>,
    pub corrected_rmse: Vec<f64>,
}

/// Monte Carlo of the error correction: the store is filled from `history`
/// past errors, then each trial draws a fresh error path, observes the last
/// one-step error and corrects the next `horizon` leads.
pub fn correction_study(process: ErrorProcess, trials: usize, horizon: usize, history: usize, seed: u64) -> CorrectionStudy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let store = ForecastErrorStore::from_errors(horizon, process.sample(history, &mut rng));
    let mut raw = vec![0.0; horizon];
    let mut cor = vec![0.0; horizon];
    let flat = vec![0.0; horizon];
    for _ in 0..trials {
        let path = process.sample(horizon + 1, &mut rng);
        let shift = correct_forecast_unclamped(&flat, path[0], &store);
        for k in 0..horizon {
            let e = path[k + 1];
            raw[k] += e * e;
            cor[k] += (e - shift[k]).powi(2);
        }
    }
    let rms = |v: Vec<f64>| v.into_iter().map(|s| (s / trials as f64).sqrt()).collect();
    CorrectionStudy { raw_rmse: rms(raw), corrected_rmse: rms(cor) }
}

fn correct_forecast_unclamped(raw: &[f64], prev_error: f64, store: &ForecastErrorStore) -> Vec<f64> {
    raw.iter().enumerate().map(|(k, v)| v + prev_error * store.table().get(k + 1).copied().unwrap_or(0.0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Days of labeled samples used for the initial fit (after the first
    /// week, which only feeds the lag features).
    pub train_days: usize,
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { train_days: 7, train: TrainConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeadMetrics {
    /// Steps ahead, starting at 1.
    pub lead: usize,
    pub count: usize,
    pub raw_rmse: f64,
    pub corrected_rmse: f64,
    pub retrained_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub leads: Vec<LeadMetrics>,
    /// Mean |demand| over the evaluated days, for normalizing.
    pub demand_scale: f64,
    pub train_mse: f64,
}

struct Accum {
    sq: [Vec<f64>; 3],
    count: Vec<usize>,
}

/// Replays every 15-minute forecast from the end of training to the end of
/// `records`. Each origin forecasts to midnight with three variants: the
/// initial network, the same with error correction, and a nightly
/// fine-tuned network with error correction. Ambient temperature forecasts
/// are taken to be exact.
pub fn evaluate_pipeline(records: &[DemandRecord], cfg: &PipelineConfig) -> Result<PipelineReport, ForecastError> {
    let train_end = STEPS_PER_WEEK + cfg.train_days * STEPS_PER_DAY;
    if records.len() < train_end + STEPS_PER_DAY {
        return Err(ForecastError::InsufficientData { have: records.len(), need: train_end + STEPS_PER_DAY });
    }
    let train = examples(records, STEPS_PER_WEEK, train_end)?;
    let (model, report) = train_mlp(&train, &cfg.train)?;
    let fitted: Vec<f64> = train.iter().map(|(f, y)| y - model.predict(f)).collect();
    let mut static_store = ForecastErrorStore::from_errors(STEPS_PER_DAY, fitted.iter().copied());
    let mut online_store = static_store.clone();
    let mut online = model.clone();
    let days = (records.len() - train_end) / STEPS_PER_DAY;
    let eval_end = train_end + days * STEPS_PER_DAY;
    let all = examples(records, train_end, eval_end)?;
    let mut acc = Accum { sq: [vec![0.0; STEPS_PER_DAY], vec![0.0; STEPS_PER_DAY], vec![0.0; STEPS_PER_DAY]], count: vec![0; STEPS_PER_DAY] };
    let (mut prev_static, mut prev_online) = (*fitted.last().unwrap_or(&0.0), *fitted.last().unwrap_or(&0.0));
    for d in 0..days {
        let day = &all[d * STEPS_PER_DAY..(d + 1) * STEPS_PER_DAY];
        if d > 0 {
            online = retrain_online(&online, &all[(d - 1) * STEPS_PER_DAY..d * STEPS_PER_DAY], &cfg.train)?;
        }
        for s in 0..STEPS_PER_DAY {
            let rest = &day[s..];
            let raw: Vec<f64> = rest.iter().map(|(f, _)| model.predict(f)).collect();
            let corrected = correct_forecast(&raw, prev_static, &static_store);
            let on_raw: Vec<f64> = rest.iter().map(|(f, _)| online.predict(f)).collect();
            let retrained = correct_forecast(&on_raw, prev_online, &online_store);
            for (k, (_, y)) in rest.iter().enumerate() {
                acc.sq[0][k] += (y - raw[k]).powi(2);
                acc.sq[1][k] += (y - corrected[k]).powi(2);
                acc.sq[2][k] += (y - retrained[k]).powi(2);
                acc.count[k] += 1;
            }
            // one-step errors of the uncorrected networks feed the stores
            prev_static = rest[0].1 - raw[0];
            prev_online = rest[0].1 - on_raw[0];
            static_store.push(prev_static);
            online_store.push(prev_online);
        }
    }
    let leads = (0..STEPS_PER_DAY)
        .filter(|&k| acc.count[k] > 0)
        .map(|k| {
            let n = acc.count[k] as f64;
            LeadMetrics {
                lead: k + 1,
                count: acc.count[k],
                raw_rmse: (acc.sq[0][k] / n).sqrt(),
                corrected_rmse: (acc.sq[1][k] / n).sqrt(),
                retrained_rmse: (acc.sq[2][k] / n).sqrt(),
            }
        })
        .collect();
    let demand_scale = all.iter().map(|(_, y)| y.abs()).sum::<f64>() / all.len() as f64;
    Ok(PipelineReport { leads, demand_scale, train_mse: report.final_mse })
}

/// Mean of (actual − forecast) over samples `start..end`.
pub fn forecast_bias(model: &MlpModel, records: &[DemandRecord], start: usize, end: usize) -> Result<f64, ForecastError> {
    let data = examples(records, start, end)?;
    Ok(data.iter().map(|(f, y)| y - model.predict(f)).sum::<f64>() / data.len().max(1) as f64)
}

/// Root mean square of (actual − forecast) over samples `start..end`.
pub fn forecast_rmse(model: &MlpModel, records: &[DemandRecord], start: usize, end: usize) -> Result<f64, ForecastError> {
    Ok(model.mse(&examples(records, start, end)?).sqrt())
}

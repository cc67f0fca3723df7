use anyhow::Result;
use serde::Serialize;
use thermoreg_core::forecast::eval::{correction_study, evaluate_pipeline, ErrorProcess, LeadMetrics, PipelineConfig};
use thermoreg_core::forecast::{TrainConfig, STEPS_PER_DAY, STEPS_PER_WEEK};
use thermoreg_core::plant::gen_demand_profile;

use crate::config::{config_error, ExperimentConfig};
use crate::output::RunDir;

#[derive(Debug, Serialize)]
struct StudyRow {
    process: &'static str,
    lead: usize,
    raw_rmse: f64,
    corrected_rmse: f64,
}

#[derive(Debug, Serialize)]
pub struct StudySummary {
    pub ar1_one_step_raw: f64,
    pub ar1_one_step_corrected: f64,
    pub white_one_step_raw: f64,
    pub white_one_step_corrected: f64,
    /// Largest |corrected/raw − 1| over all leads of the white-noise study.
    pub white_max_ratio_deviation: f64,
}

#[derive(Debug, Serialize)]
pub struct PipelineSummary {
    pub days: usize,
    pub demand_scale: f64,
    pub train_mse: f64,
    pub mean_raw_rmse: f64,
    pub mean_corrected_rmse: f64,
    pub mean_retrained_rmse: f64,
}

#[derive(Debug, Serialize)]
pub struct ForecastSummary {
    pub study: StudySummary,
    pub pipeline: PipelineSummary,
}

fn mean(leads: &[LeadMetrics], f: fn(&LeadMetrics) -> f64) -> f64 {
    leads.iter().map(f).sum::<f64>() / leads.len().max(1) as f64
}

pub fn cmd_forecast_eval(cfg: &ExperimentConfig, dir: &RunDir) -> Result<()> {
    let fc = &cfg.forecast;
    if fc.days == 0 || fc.train_days * STEPS_PER_DAY < STEPS_PER_WEEK {
        return Err(config_error("forecast evaluation needs at least a week of training and one evaluation day"));
    }
    if fc.trials == 0 || fc.horizon == 0 || fc.history <= fc.horizon {
        return Err(config_error("correction study needs trials, a horizon and a longer error history"));
    }
    if !(0.0..1.0).contains(&fc.ar_coeff.abs()) || fc.error_std < 0.0 {
        return Err(config_error("error process needs |ar_coeff| < 1 and a nonnegative std"));
    }
    let ar = correction_study(ErrorProcess::Ar1 { coeff: fc.ar_coeff, std: fc.error_std }, fc.trials, fc.horizon, fc.history, fc.study_seed);
    let white = correction_study(ErrorProcess::White { std: fc.error_std }, fc.trials, fc.horizon, fc.history, fc.study_seed.wrapping_add(1));
    let mut study_rows = Vec::new();
    for (process, s) in [("ar1", &ar), ("white", &white)] {
        for k in 0..fc.horizon {
            study_rows.push(StudyRow { process, lead: k + 1, raw_rmse: s.raw_rmse[k], corrected_rmse: s.corrected_rmse[k] });
        }
    }
    dir.csv("correction.csv", &study_rows)?;

    let total_days = STEPS_PER_WEEK / STEPS_PER_DAY + fc.train_days + fc.days;
    let corpus = gen_demand_profile(fc.demand_seed, total_days, &fc.demand);
    let pipeline_cfg = PipelineConfig {
        train_days: fc.train_days,
        train: TrainConfig { hidden: fc.hidden.clone(), epochs: fc.epochs, learning_rate: fc.learning_rate, seed: fc.train_seed },
    };
    let report = evaluate_pipeline(&corpus.to_records(), &pipeline_cfg)?;
    dir.csv("pipeline.csv", &report.leads)?;

    let summary = ForecastSummary {
        study: StudySummary {
            ar1_one_step_raw: ar.raw_rmse[0],
            ar1_one_step_corrected: ar.corrected_rmse[0],
            white_one_step_raw: white.raw_rmse[0],
            white_one_step_corrected: white.corrected_rmse[0],
            white_max_ratio_deviation: white.raw_rmse.iter().zip(&white.corrected_rmse).map(|(r, c)| if *r > 0.0 { (c / r - 1.0).abs() } else { 0.0 }).fold(0.0, f64::max),
        },
        pipeline: PipelineSummary {
            days: fc.days,
            demand_scale: report.demand_scale,
            train_mse: report.train_mse,
            mean_raw_rmse: mean(&report.leads, |l| l.raw_rmse),
            mean_corrected_rmse: mean(&report.leads, |l| l.corrected_rmse),
            mean_retrained_rmse: mean(&report.leads, |l| l.retrained_rmse),
        },
    };
    dir.toml("summary.toml", &summary)
}

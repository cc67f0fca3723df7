//! Heating-demand forecasting: a small feed-forward network, correction of
//! fresh forecasts by the autocorrelation of past one-step errors, and
//! nightly fine-tuning.

mod correction;
pub mod eval;
mod features;
mod mlp;

use thiserror::Error;

pub use correction::{autocorr, correct_forecast, ForecastErrorStore};
pub use features::{examples, read_records, write_records, DemandRecord, FeatureVector, INPUTS, STEPS_PER_DAY, STEPS_PER_WEEK};
pub use mlp::{predict_horizon, retrain_online, train_mlp, MlpModel, TrainConfig, TrainReport};

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("need at least {need} samples, got {have}")]
    InsufficientData { have: usize, need: usize },
    #[error("training produced a non-finite loss")]
    NonFiniteLoss,
    #[error("sample {0} has no full week of history")]
    MissingHistory(usize),
    #[error("online retraining expects one day of samples, got {0}")]
    WrongDayLength(usize),
    #[error("error store of length {len} cannot estimate lag {lag}")]
    ShortStore { len: usize, lag: usize },
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

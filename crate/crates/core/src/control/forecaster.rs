use crate::forecast::{correct_forecast, examples, retrain_online, train_mlp, DemandRecord, FeatureVector, ForecastError, ForecastErrorStore, MlpModel, TrainConfig, STEPS_PER_DAY, STEPS_PER_WEEK};

/// Source of demand forecasts for the scheduling levels. Steps are absolute
/// indices into the scenario's record list.
pub trait Forecaster {
    /// Forecast for steps `from..to`, given measurements of every step before
    /// `from`.
    fn forecast(&mut self, from: usize, to: usize) -> Result<Vec<f64>, ForecastError>;
    /// Called once the day ending at step `end` (exclusive) is fully measured.
    fn end_of_day(&mut self, end: usize) -> Result<(), ForecastError>;
}

/// Knows the true demand.
#[derive(Debug, Clone)]
pub struct PerfectForecaster {
    pub demand: Vec<f64>,
}

impl Forecaster for PerfectForecaster {
    fn forecast(&mut self, from: usize, to: usize) -> Result<Vec<f64>, ForecastError> {
        Ok(self.demand[from..to].to_vec())
    }

    fn end_of_day(&mut self, _end: usize) -> Result<(), ForecastError> {
        Ok(())
    }
}

/// Network forecast with error-autocorrelation correction and nightly
/// fine-tuning. Ambient temperature forecasts are taken to be exact.
#[derive(Debug, Clone)]
pub struct NetworkForecaster {
    records: Vec<DemandRecord>,
    model: MlpModel,
    store: ForecastErrorStore,
    cfg: TrainConfig,
    retrain: bool,
    /// Next step whose one-step error has not been recorded.
    next_error: usize,
    last_error: f64,
}

impl NetworkForecaster {
    /// Trains on samples `STEPS_PER_WEEK..train_end` and seeds the error store
    /// with the fitted errors.
    pub fn train(records: Vec<DemandRecord>, train_end: usize, cfg: TrainConfig, retrain: bool) -> Result<Self, ForecastError> {
        let data = examples(&records, STEPS_PER_WEEK, train_end)?;
        let (model, _) = train_mlp(&data, &cfg)?;
        let errors: Vec<f64> = data.iter().map(|(f, y)| y - model.predict(f)).collect();
        let last_error = errors.last().copied().unwrap_or(0.0);
        Ok(NetworkForecaster {
            store: ForecastErrorStore::from_errors(STEPS_PER_DAY, errors),
            records,
            model,
            cfg,
            retrain,
            next_error: train_end,
            last_error,
        })
    }

    pub fn model(&self) -> &MlpModel {
        &self.model
    }

    fn record_errors(&mut self, upto: usize) -> Result<(), ForecastError> {
        while self.next_error < upto {
            let i = self.next_error;
            let e = self.records[i].demand_kw - self.model.predict(&FeatureVector::at(&self.records, i)?);
            self.store.push(e);
            self.last_error = e;
            self.next_error += 1;
        }
        Ok(())
    }
}

impl Forecaster for NetworkForecaster {
    fn forecast(&mut self, from: usize, to: usize) -> Result<Vec<f64>, ForecastError> {
        self.record_errors(from)?;
        let raw = (from..to).map(|i| Ok(self.model.predict(&FeatureVector::at(&self.records, i)?))).collect::<Result<Vec<_>, ForecastError>>()?;
        Ok(correct_forecast(&raw, self.last_error, &self.store))
    }

    fn end_of_day(&mut self, end: usize) -> Result<(), ForecastError> {
        self.record_errors(end)?;
        if self.retrain {
            let day = examples(&self.records, end - STEPS_PER_DAY, end)?;
            self.model = retrain_online(&self.model, &day, &self.cfg)?;
        }
        Ok(())
    }
}
